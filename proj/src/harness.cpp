#include "cyscale/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace cyscale {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error("invalid configuration:\n  " + join(violations, "\n  ")),
      violations_(std::move(violations)) {}

// ---------------------------------------------------------------------------
// Question corpus

QuestionCorpus QuestionCorpus::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("question corpus is not valid JSON: ") + e.what()});
  }
  const json* list = &doc;
  if (doc.is_object() && doc.contains("questions")) list = &doc["questions"];
  if (!list->is_array()) throw ConfigError({"question corpus must be an array of questions"});

  std::vector<Question> entries;
  std::vector<std::string> violations;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& item = (*list)[i];
    Question q;
    bool ok = item.is_object();
    for (auto [field, target] : {std::pair{"id", &q.id}, std::pair{"dataset_id", &q.dataset_id},
                                 std::pair{"complexity", &q.complexity}, std::pair{"text", &q.text}}) {
      if (ok && item.contains(field) && item[field].is_string()) {
        *target = item[field].get<std::string>();
      } else {
        ok = false;
      }
    }
    if (!ok) {
      violations.push_back("question #" + std::to_string(i) +
                           " needs string fields id, dataset_id, complexity, text");
      continue;
    }
    entries.push_back(std::move(q));
  }
  if (!violations.empty()) throw ConfigError(violations);
  return QuestionCorpus(std::move(entries));
}

QuestionCorpus QuestionCorpus::load(const fs::path& path) {
  try {
    return from_json(read_file(path));
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError({e.what()});
  }
}

const Question* QuestionCorpus::find(const std::string& id) const {
  for (const auto& q : entries_) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

std::vector<std::string> QuestionCorpus::problems(
    const std::optional<std::set<std::string>>& known_datasets) const {
  std::vector<std::string> out;
  std::set<std::string> ids;
  std::map<std::string, std::set<std::string>> tiers;
  for (const auto& q : entries_) {
    if (!ids.insert(q.id).second) out.push_back("duplicate question id '" + q.id + "'");
    if (std::find(kComplexityTiers.begin(), kComplexityTiers.end(), q.complexity) ==
        kComplexityTiers.end()) {
      out.push_back("question '" + q.id + "' has unknown complexity '" + q.complexity +
                    "' (expected Easy, Medium or Hard)");
    }
    tiers[q.dataset_id].insert(q.complexity);
    if (known_datasets && !known_datasets->count(q.dataset_id)) {
      out.push_back("question '" + q.id + "' references unknown dataset '" + q.dataset_id + "'");
    }
  }
  for (const auto& [dataset, present] : tiers) {
    for (const auto& tier : kComplexityTiers) {
      if (!present.count(tier)) out.push_back("dataset '" + dataset + "' has no " + tier + " question");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment config

namespace {

class FieldReader {
 public:
  FieldReader(const json& object, std::string where, std::vector<std::string>& violations)
      : object_(object), where_(std::move(where)), violations_(violations) {}

  template <typename T>
  std::optional<T> get(const std::string& key) {
    seen_.insert(key);
    if (!object_.contains(key)) return std::nullopt;
    try {
      return object_.at(key).get<T>();
    } catch (const json::exception&) {
      violations_.push_back(where_ + ": field '" + key + "' has the wrong type");
      return std::nullopt;
    }
  }

  template <typename T>
  void read(const std::string& key, T& target) {
    if (auto value = get<T>(key)) target = std::move(*value);
  }

  void reject_unknown() {
    for (const auto& [key, _] : object_.items()) {
      if (!seen_.count(key)) violations_.push_back(where_ + ": unknown field '" + key + "'");
    }
  }

 private:
  const json& object_;
  std::string where_;
  std::vector<std::string>& violations_;
  std::set<std::string> seen_;
};

std::map<std::string, std::vector<std::string>> parse_sequences(const json& doc, const std::string& where,
                                                                std::vector<std::string>& violations) {
  std::map<std::string, std::vector<std::string>> out;
  try {
    out = doc.get<std::map<std::string, std::vector<std::string>>>();
  } catch (const json::exception&) {
    violations.push_back(where + ": sequences must map question ids to lists of queries");
  }
  return out;
}

std::optional<GeneratorConfig> parse_generator(const json& item, std::size_t index,
                                               const std::optional<std::string>& auth_token,
                                               std::vector<std::string>& violations) {
  const std::string where = "generators[" + std::to_string(index) + "]";
  if (!item.is_object()) {
    violations.push_back(where + " must be an object");
    return std::nullopt;
  }
  FieldReader r(item, where, violations);
  GeneratorConfig config;
  r.read("name", config.name);
  r.read("temperature", config.temperature);
  r.read("prompt_header", config.prompt.header);
  r.read("corrective_instruction", config.prompt.corrective_instruction);
  const auto backend = r.get<std::string>("backend").value_or("");

  if (backend == "stochastic") {
    StochasticBackend b;
    r.read("p0", b.p0);
    r.read("gamma", b.gamma);
    config.backend = b;
  } else if (backend == "scripted") {
    ScriptedBackend b;
    b.sequence_id = config.name;
    r.read("sequence_id", b.sequence_id);
    if (auto path = r.get<std::string>("script")) {
      try {
        const auto doc = json::parse(read_file(*path));
        if (doc.contains("sequence_id") && doc["sequence_id"].is_string()) {
          b.sequence_id = doc["sequence_id"].get<std::string>();
        }
        b.sequences = parse_sequences(doc.contains("sequences") ? doc["sequences"] : doc,
                                      where + " script " + *path, violations);
      } catch (const std::exception& e) {
        violations.push_back(where + ": cannot load script " + *path + ": " + e.what());
      }
    } else if (item.contains("sequences")) {
      b.sequences = parse_sequences(item["sequences"], where, violations);
    } else {
      violations.push_back(where + ": scripted backend needs 'script' or 'sequences'");
    }
    r.get<json>("sequences");
    config.backend = b;
  } else if (backend == "remote") {
    RemoteCompletionBackend b;
    r.read("endpoint", b.endpoint);
    r.read("model", b.model);
    r.read("max_tokens", b.max_tokens);
    r.read("timeout_ms", b.timeout_ms);
    r.read("path", b.path);
    r.read("response_pointer", b.response_pointer);
    b.auth_token = auth_token;
    config.backend = b;
  } else {
    violations.push_back(where + ": backend must be one of stochastic, scripted, remote");
    r.reject_unknown();
    return std::nullopt;
  }
  r.reject_unknown();
  try {
    check_generator_config(config);
  } catch (const std::invalid_argument& e) {
    violations.push_back(where + ": " + e.what());
    return std::nullopt;
  }
  return config;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text,
                                             const std::optional<std::string>& auth_token) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"config must be a JSON object"});

  std::vector<std::string> violations;
  FieldReader r(doc, "config", violations);
  ExperimentConfig config;

  for (const auto& path : r.get<std::vector<std::string>>("datasets").value_or(std::vector<std::string>{})) {
    config.datasets.emplace_back(path);
  }
  if (config.datasets.empty()) violations.push_back("config: 'datasets' must list at least one schema file");
  if (auto q = r.get<std::string>("questions")) config.questions = *q;
  if (config.questions.empty()) violations.push_back("config: 'questions' corpus path is required");
  r.read("question_ids", config.question_ids);

  if (auto generators = r.get<json>("generators"); generators && generators->is_array()) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < generators->size(); ++i) {
      if (auto g = parse_generator((*generators)[i], i, auth_token, violations)) {
        if (!names.insert(g->name).second) {
          violations.push_back("config: duplicate generator name '" + g->name + "'");
        }
        config.generators.push_back(std::move(*g));
      }
    }
  }
  if (config.generators.empty() && violations.empty()) {
    violations.push_back("config: 'generators' must list at least one generator");
  }

  if (auto names = r.get<std::vector<std::string>>("strategies")) {
    config.strategies.clear();
    for (const auto& name : *names) {
      if (auto s = strategy_from_string(name)) {
        if (std::find(config.strategies.begin(), config.strategies.end(), *s) == config.strategies.end()) {
          config.strategies.push_back(*s);
        }
      } else {
        violations.push_back("config: unknown strategy '" + name + "' (expected IS or RAS)");
      }
    }
    if (config.strategies.empty()) violations.push_back("config: 'strategies' must not be empty");
  }
  if (auto budgets = r.get<std::vector<int>>("budgets")) {
    config.budgets = *budgets;
    if (budgets->empty()) violations.push_back("config: 'budgets' must not be empty");
    for (int b : *budgets) {
      if (b < 1) violations.push_back("config: budget " + std::to_string(b) + " is not positive");
    }
  }
  if (auto reps = r.get<std::int64_t>("replications")) {
    if (*reps < 1 || *reps > 100000000) {
      violations.push_back("config: 'replications' must be at least 1");
    } else {
      config.replications = static_cast<std::uint32_t>(*reps);
    }
  }
  r.read("master_seed", config.master_seed);
  if (auto workers = r.get<int>("parallelism")) {
    config.parallelism = *workers;
    if (*workers < 1) violations.push_back("config: 'parallelism' must be at least 1");
  }
  if (auto threshold = r.get<double>("abort_threshold")) {
    config.abort_threshold = *threshold;
    if (!(*threshold >= 0.0 && *threshold <= 1.0)) {
      violations.push_back("config: 'abort_threshold' must lie in [0, 1]");
    }
  }
  if (auto exec = r.get<json>("executor")) {
    if (!exec->is_object()) {
      violations.push_back("config: 'executor' must be an object");
    } else {
      FieldReader er(*exec, "executor", violations);
      const auto kind = er.get<std::string>("kind").value_or("embedded");
      if (kind == "embedded") {
        config.executor = EmbeddedExecutorSpec{};
      } else if (kind == "remote") {
        RemoteExecutorSpec spec;
        er.read("endpoint", spec.endpoint);
        er.read("timeout_ms", spec.timeout_ms);
        spec.auth_token = auth_token;
        try {
          check_target(RemoteTarget{spec.endpoint, spec.timeout_ms, spec.auth_token, "neo4j"});
        } catch (const std::invalid_argument& e) {
          violations.push_back(std::string("executor: ") + e.what());
        }
        config.executor = spec;
      } else {
        violations.push_back("executor: kind must be embedded or remote");
      }
      er.reject_unknown();
    }
  }
  r.reject_unknown();
  if (!violations.empty()) throw ConfigError(violations);
  return config;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path, const std::optional<std::string>& auth_token) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError({e.what()});
  }
  return from_json(text, auth_token);
}

ExperimentPlan prepare_experiment(const ExperimentConfig& config) {
  std::vector<std::string> violations;
  if (config.replications < 1) violations.push_back("replications must be at least 1");
  if (config.budgets.empty()) violations.push_back("budgets must not be empty");
  for (int b : config.budgets) {
    if (b < 1) violations.push_back("budget " + std::to_string(b) + " is not positive");
  }
  if (config.parallelism < 1) violations.push_back("parallelism must be at least 1");
  if (config.strategies.empty()) violations.push_back("strategies must not be empty");
  if (config.generators.empty()) violations.push_back("at least one generator is required");

  ExperimentPlan plan;
  for (const auto& path : config.datasets) {
    try {
      auto schema = std::make_shared<const GraphSchema>(GraphSchema::load(path));
      const auto id = schema->dataset_id();
      if (!plan.schemas.emplace(id, std::move(schema)).second) {
        violations.push_back("dataset '" + id + "' is declared by more than one schema file");
      }
    } catch (const std::exception& e) {
      violations.push_back("schema " + path.string() + ": " + e.what());
    }
  }

  QuestionCorpus corpus;
  try {
    corpus = QuestionCorpus::load(config.questions);
    for (auto& p : corpus.problems(std::nullopt)) violations.push_back(std::move(p));
  } catch (const ConfigError& e) {
    for (const auto& v : e.violations()) violations.push_back(v);
  }

  if (config.question_ids.empty()) {
    plan.questions = corpus.entries();
  } else {
    for (const auto& id : config.question_ids) {
      if (const auto* q = corpus.find(id)) {
        plan.questions.push_back(*q);
      } else {
        violations.push_back("question id '" + id + "' is not in the corpus");
      }
    }
  }
  for (const auto& q : plan.questions) {
    if (!plan.schemas.count(q.dataset_id) && !config.datasets.empty()) {
      violations.push_back("question '" + q.id + "' references dataset '" + q.dataset_id +
                           "' which no configured schema declares");
    }
  }
  for (const auto& g : config.generators) {
    if (const auto* scripted = std::get_if<ScriptedBackend>(&g.backend)) {
      for (const auto& q : plan.questions) {
        if (!scripted->sequences.count(q.id)) {
          violations.push_back("generator '" + g.name + "' has no script for question '" + q.id + "'");
        }
      }
    }
  }
  if (!violations.empty()) throw ConfigError(violations);
  return plan;
}

// ---------------------------------------------------------------------------
// Seeds

std::string CellKey::to_string() const {
  return question_id + "|" + generator + "|" + std::string(cyscale::to_string(strategy)) + "|" +
         std::to_string(budget);
}

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t run_seed(std::uint64_t master_seed, const CellKey& cell, std::uint64_t replication) {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ fnv1a(cell.to_string()));
  return splitmix64(h ^ replication);
}

// ---------------------------------------------------------------------------
// Run log

RunLogError::RunLogError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

json record_json(const RunRecord& record) {
  json attempts = json::array();
  for (const auto& a : record.attempts) {
    attempts.push_back({{"query", a.query},
                        {"class", std::string(to_string(a.message.cls))},
                        {"detail", a.message.detail},
                        {"source", std::string(to_string(a.message.source))}});
  }
  return {{"question_id", record.question_id},
          {"dataset", record.dataset},
          {"model", record.model},
          {"complexity", record.complexity},
          {"strategy", std::string(to_string(record.strategy))},
          {"budget", record.budget},
          {"replication", record.replication},
          {"seed", record.seed},
          {"attempts", std::move(attempts)},
          {"final_query", record.final_query},
          {"qee", record.qee}};
}

json cell_json(const CellKey& cell) {
  return {{"question_id", cell.question_id},
          {"generator", cell.generator},
          {"strategy", std::string(to_string(cell.strategy))},
          {"budget", cell.budget}};
}

}  // namespace

std::string record_to_json(const RunRecord& record) { return record_json(record).dump(); }

RunRecord record_from_json(const std::string& line) {
  const auto doc = json::parse(line);
  RunRecord record;
  record.question_id = doc.at("question_id").get<std::string>();
  record.dataset = doc.at("dataset").get<std::string>();
  record.model = doc.at("model").get<std::string>();
  record.complexity = doc.at("complexity").get<std::string>();
  const auto strategy = strategy_from_string(doc.at("strategy").get<std::string>());
  if (!strategy) throw std::invalid_argument("unknown strategy " + doc.at("strategy").dump());
  record.strategy = *strategy;
  record.budget = doc.at("budget").get<int>();
  record.replication = doc.at("replication").get<std::uint32_t>();
  record.seed = doc.at("seed").get<std::uint64_t>();
  for (const auto& a : doc.at("attempts")) {
    Attempt attempt;
    attempt.query = a.at("query").get<std::string>();
    const auto cls = message_class_from_string(a.at("class").get<std::string>());
    if (!cls) throw std::invalid_argument("unknown message class " + a.at("class").dump());
    attempt.message.cls = *cls;
    attempt.message.detail = a.at("detail").get<std::string>();
    const auto source = message_source_from_string(a.value("source", std::string("Embedded")));
    if (!source) throw std::invalid_argument("unknown message source " + a.at("source").dump());
    attempt.message.source = *source;
    record.attempts.push_back(std::move(attempt));
  }
  record.final_query = doc.at("final_query").get<std::string>();
  record.qee = doc.at("qee").get<int>();
  check_record(record);
  return record;
}

void write_run_log(std::ostream& out, const std::vector<RunRecord>& records) {
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

std::vector<RunRecord> read_run_log(std::istream& in) {
  std::vector<RunRecord> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      throw RunLogError(number, e.what());
    }
  }
  return records;
}

std::vector<RunRecord> read_run_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read run log " + path.string());
  return read_run_log(in);
}

std::string abort_to_json(const AbortEntry& entry) {
  auto doc = cell_json(entry.cell);
  doc["dataset"] = entry.dataset;
  doc["complexity"] = entry.complexity;
  doc["replication"] = entry.replication;
  doc["seed"] = entry.seed;
  doc["reason"] = entry.reason;
  return doc.dump();
}

std::vector<AbortEntry> read_aborts(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read abort log " + path.string());
  std::vector<AbortEntry> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = json::parse(line);
      AbortEntry e;
      e.cell.question_id = doc.at("question_id").get<std::string>();
      e.cell.generator = doc.at("generator").get<std::string>();
      const auto s = strategy_from_string(doc.at("strategy").get<std::string>());
      if (!s) throw std::invalid_argument("unknown strategy");
      e.cell.strategy = *s;
      e.cell.budget = doc.at("budget").get<int>();
      e.dataset = doc.at("dataset").get<std::string>();
      e.complexity = doc.at("complexity").get<std::string>();
      e.replication = doc.at("replication").get<std::uint32_t>();
      e.seed = doc.at("seed").get<std::uint64_t>();
      e.reason = doc.at("reason").get<std::string>();
      out.push_back(std::move(e));
    } catch (const std::exception& e) {
      throw RunLogError(number, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment execution

namespace {

struct Cell {
  CellKey key;
  const Question* question;
  std::size_t generator;
};

class OrderedSink {
 public:
  OrderedSink(std::size_t n, std::ostream* log) : slots_(n), done_(n, 0), log_(log) {}

  void complete(std::size_t index, StrategyResult result) {
    std::lock_guard lock(mutex_);
    slots_[index] = std::move(result);
    done_[index] = 1;
    while (next_ < done_.size() && done_[next_]) {
      if (log_ && !slots_[next_].aborted) {
        *log_ << record_to_json(slots_[next_].record) << '\n';
        log_->flush();
      }
      ++next_;
    }
  }

  std::vector<StrategyResult>& results() { return slots_; }

 private:
  std::mutex mutex_;
  std::vector<StrategyResult> slots_;
  std::vector<char> done_;
  std::size_t next_ = 0;
  std::ostream* log_;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const std::optional<fs::path>& out_dir) {
  const auto plan = prepare_experiment(config);

  std::map<std::string, Executor> executors;
  for (const auto& [id, schema] : plan.schemas) {
    if (const auto* remote = std::get_if<RemoteExecutorSpec>(&config.executor)) {
      executors.emplace(id, Executor(RemoteTarget{remote->endpoint, remote->timeout_ms, remote->auth_token, id}));
    } else {
      executors.emplace(id, Executor(EmbeddedTarget{schema}));
    }
  }
  std::vector<Generator> generators;
  for (const auto& g : config.generators) generators.emplace_back(g);

  std::vector<Cell> cells;
  for (const auto& q : plan.questions) {
    for (std::size_t g = 0; g < generators.size(); ++g) {
      for (auto strategy : config.strategies) {
        for (int budget : config.budgets) {
          cells.push_back(Cell{CellKey{q.id, generators[g].name(), strategy, budget}, &q, g});
        }
      }
    }
  }

  std::ofstream log_file;
  if (out_dir) {
    fs::create_directories(*out_dir);
    log_file.open(*out_dir / "run_log.ndjson", std::ios::binary | std::ios::trunc);
    if (!log_file) throw std::runtime_error("cannot write " + (*out_dir / "run_log.ndjson").string());
  }

  const std::size_t reps = config.replications;
  const std::size_t total = cells.size() * reps;
  OrderedSink sink(total, out_dir ? &log_file : nullptr);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed) {
      const auto index = next.fetch_add(1);
      if (index >= total) return;
      const auto& cell = cells[index / reps];
      const auto rep = static_cast<std::uint32_t>(index % reps);
      try {
        const auto seed = run_seed(config.master_seed, cell.key, rep);
        auto result = run_strategy(cell.key.strategy, *cell.question, plan.schemas.at(cell.question->dataset_id),
                                   executors.at(cell.question->dataset_id), generators[cell.generator],
                                   cell.key.budget, seed);
        result.record.replication = rep;
        sink.complete(index, std::move(result));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.parallelism), std::max<std::size_t>(total, 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  ExperimentResult out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    CellSummary summary;
    summary.cell = cell.key;
    summary.dataset = cell.question->dataset_id;
    summary.complexity = cell.question->complexity;
    std::vector<int> values;
    for (std::size_t r = 0; r < reps; ++r) {
      auto& result = sink.results()[c * reps + r];
      if (result.aborted) {
        ++summary.aborts;
        out.aborts.push_back(AbortEntry{cell.key, summary.dataset, summary.complexity,
                                        static_cast<std::uint32_t>(r), result.record.seed,
                                        result.abort_reason});
      } else {
        values.push_back(result.record.qee);
        out.records.push_back(std::move(result.record));
      }
    }
    const GroupKey key{summary.dataset, cell.key.generator, summary.complexity, cell.key.strategy,
                       cell.key.budget};
    if (values.empty()) {
      summary.stats.key = key;
    } else {
      summary.stats = qer_from_values(values, key);
    }
    summary.unreliable = values.empty() || static_cast<double>(summary.aborts) / static_cast<double>(reps) >
                                               config.abort_threshold;
    out.cells.push_back(std::move(summary));
  }

  if (out_dir) {
    log_file.close();
    std::ofstream aborts(*out_dir / "aborts.ndjson", std::ios::binary | std::ios::trunc);
    for (const auto& a : out.aborts) aborts << abort_to_json(a) << '\n';

    json cells_json = json::array();
    for (const auto& s : out.cells) {
      auto entry = cell_json(s.cell);
      entry["dataset"] = s.dataset;
      entry["complexity"] = s.complexity;
      entry["n_runs"] = s.stats.n_runs;
      entry["failures"] = s.stats.failures;
      entry["qer"] = s.stats.mean;
      entry["std_dev"] = s.stats.std_dev;
      entry["aborts"] = s.aborts;
      entry["unreliable"] = s.unreliable;
      cells_json.push_back(std::move(entry));
    }
    json summary = {{"master_seed", config.master_seed},
                    {"replications", config.replications},
                    {"records", out.records.size()},
                    {"aborts", out.aborts.size()},
                    {"abort_threshold", config.abort_threshold},
                    {"std_dev", "sample standard deviation over runs (n - 1 denominator)"},
                    {"cells", std::move(cells_json)}};
    std::ofstream(*out_dir / "summary.json", std::ios::binary | std::ios::trunc) << summary.dump(2) << '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

Grouping Grouping::parse(const std::string& keys) {
  Grouping g{false, false, false};
  std::stringstream in(keys);
  std::string key;
  while (std::getline(in, key, ',')) {
    if (key == "dataset") {
      g.dataset = true;
    } else if (key == "model") {
      g.model = true;
    } else if (key == "complexity") {
      g.complexity = true;
    } else if (!key.empty()) {
      throw std::invalid_argument("unknown grouping key '" + key + "' (expected dataset, model, complexity)");
    }
  }
  return g;
}

GroupKey group_of(const RunRecord& record, const Grouping& grouping) {
  return GroupKey{grouping.dataset ? record.dataset : "*", grouping.model ? record.model : "*",
                  grouping.complexity ? record.complexity : "*", record.strategy, record.budget};
}

std::vector<QerStats> aggregate(const std::vector<RunRecord>& log, const Grouping& grouping,
                                const AggregateOptions& options, std::vector<std::string>* warnings) {
  std::map<GroupKey, std::vector<int>> groups;
  for (const auto& record : log) {
    if (options.exclude_transport && !record.attempts.empty() &&
        record.attempts.back().message.is_transport()) {
      continue;
    }
    groups[group_of(record, grouping)].push_back(qee(record));
  }

  std::vector<QerStats> out;
  std::map<GroupKey, std::vector<const QerStats*>> baseline_parts;
  for (const auto& [key, values] : groups) out.push_back(qer_from_values(values, key));
  for (const auto& stats : out) {
    if (stats.key.budget != 1) continue;
    auto base = stats.key;
    base.strategy.reset();
    baseline_parts[base].push_back(&stats);
  }

  std::vector<QerStats> baselines;
  for (const auto& [key, parts] : baseline_parts) {
    QerStats q1;
    q1.key = key;
    double sum = 0.0;
    std::vector<int> pooled;
    for (const auto* p : parts) {
      sum += p->mean;
      q1.n_runs += p->n_runs;
      q1.failures += p->failures;
    }
    q1.mean = sum / static_cast<double>(parts.size());
    pooled.insert(pooled.end(), q1.failures, 1);
    pooled.insert(pooled.end(), q1.n_runs - q1.failures, 0);
    q1.std_dev = qer_from_values(pooled, key).std_dev;
    if (parts.size() < 2 && warnings) {
      warnings->push_back("Q@1 for " + describe(key) + " uses a single strategy at budget 1");
    }
    baselines.push_back(q1);
  }
  out.insert(out.end(), baselines.begin(), baselines.end());
  std::sort(out.begin(), out.end(), [](const QerStats& a, const QerStats& b) { return a.key < b.key; });
  return out;
}

TrajectoryCurve trajectory(const std::vector<RunRecord>& log, const GroupKey& key, Strategy strategy) {
  auto matches = [](const std::string& pattern, const std::string& value) {
    return pattern == "*" || pattern == value;
  };
  std::map<int, std::vector<int>> by_budget;
  for (const auto& r : log) {
    if (r.strategy == strategy && matches(key.dataset, r.dataset) && matches(key.model, r.model) &&
        matches(key.complexity, r.complexity)) {
      by_budget[r.budget].push_back(qee(r));
    }
  }
  auto group = key;
  group.strategy = strategy;
  if (by_budget.empty()) throw std::invalid_argument("no runs for " + describe(group));
  const int max_budget = by_budget.rbegin()->first;
  for (int b = 1; b <= max_budget; ++b) {
    if (!by_budget.count(b)) {
      throw std::invalid_argument("trajectory for " + describe(group) + " is missing budget " + std::to_string(b));
    }
  }
  TrajectoryCurve curve;
  curve.key = group;
  curve.strategy = strategy;
  for (const auto& [budget, values] : by_budget) {
    group.budget = budget;
    curve.points.emplace_back(budget, qer_from_values(values, group).mean);
  }
  return curve;
}

}  // namespace cyscale
