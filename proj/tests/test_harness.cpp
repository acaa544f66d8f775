#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <gtest/gtest.h>

#include "cyscale/harness.hpp"
#include "test_support.hpp"

using namespace cyscale;
namespace fs = std::filesystem;

namespace {

ExperimentConfig base_config() {
  ExperimentConfig c;
  c.datasets = {fixtures::data_dir() / "schemas" / "crime.json", fixtures::data_dir() / "schemas" / "fraud.json",
                fixtures::data_dir() / "schemas" / "healthcare.json"};
  c.questions = fixtures::data_dir() / "questions.json";
  c.master_seed = 42;
  return c;
}

ExperimentConfig scripted_config() {
  auto c = base_config();
  c.question_ids = {"crime_easy"};
  c.generators = {GeneratorConfig{
      "replay",
      ScriptedBackend{"s", {{"crime_easy", {"MATCH (c:Crim) RETURN c", "MATCH (c:Crime) RETURN c.id, c.type"}}}},
      0.9,
      {}}};
  c.budgets = {1, 2};
  c.replications = 1;
  return c;
}

ExperimentConfig stochastic_config(int workers) {
  auto c = base_config();
  c.question_ids = {"crime_hard", "fraud_medium"};
  c.generators = {GeneratorConfig{"mock", StochasticBackend{0.6, 0.5}, 0.9, {}}};
  c.budgets = {1, 3};
  c.replications = 50;
  c.parallelism = workers;
  return c;
}

RunRecord synthetic(const std::string& dataset, Strategy s, int budget, int qee_value, std::uint32_t rep) {
  RunRecord r;
  r.question_id = dataset + "_q";
  r.dataset = dataset;
  r.model = "m";
  r.complexity = "Easy";
  r.strategy = s;
  r.budget = budget;
  r.replication = rep;
  r.seed = rep;
  const ExecutionMessage bad{MessageClass::SyntaxError, "x", MessageSource::Embedded};
  if (qee_value == 1) {
    for (int t = 0; t < budget; ++t) r.attempts.push_back(Attempt{"MATCH (", bad});
  } else {
    r.attempts.push_back(Attempt{"MATCH (n) RETURN n", ExecutionMessage{}});
  }
  r.final_query = r.attempts.back().query;
  r.qee = qee_value;
  return r;
}

void add_runs(std::vector<RunRecord>& log, const std::string& dataset, Strategy s, int budget, int failures,
              int total) {
  for (int i = 0; i < total; ++i) log.push_back(synthetic(dataset, s, budget, i < failures ? 1 : 0, i));
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("cyscale_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(Experiment, ScriptedReplayProducesOneRecordPerCell) {
  const auto result = run_experiment(scripted_config());
  ASSERT_EQ(result.records.size(), 4u);
  EXPECT_TRUE(result.aborts.empty());
  for (const auto& r : result.records) {
    EXPECT_NO_THROW(check_record(r));
    EXPECT_EQ(r.dataset, "crime");
    EXPECT_EQ(r.complexity, "Easy");
    EXPECT_EQ(r.qee, r.budget == 1 ? 1 : 0);
  }
}

TEST(Experiment, IndependentOfWorkerCount) {
  const auto one = run_experiment(stochastic_config(1));
  const auto many = run_experiment(stochastic_config(6));
  EXPECT_EQ(one.records, many.records);
  EXPECT_EQ(one.records.size(), 2u * 2u * 2u * 50u);
}

TEST(Experiment, WritesArtifacts) {
  const auto dir = scratch("artifacts");
  const auto result = run_experiment(stochastic_config(3), dir);
  const auto log = read_run_log(dir / "run_log.ndjson");
  EXPECT_EQ(log, result.records);
  EXPECT_TRUE(read_aborts(dir / "aborts.ndjson").empty());
  EXPECT_NE(slurp(dir / "summary.json").find("\"master_seed\""), std::string::npos);
  fs::remove_all(dir);
}

TEST(Experiment, UnreachableExecutorAbortsEveryRun) {
  auto config = stochastic_config(2);
  config.replications = 3;
  config.executor = RemoteExecutorSpec{fixtures::closed_url(), 500, std::nullopt};
  const auto result = run_experiment(config);
  EXPECT_TRUE(result.records.empty());
  EXPECT_EQ(result.aborts.size(), 2u * 2u * 2u * 3u);
  for (const auto& cell : result.cells) EXPECT_TRUE(cell.unreliable);
}

TEST(Config, CollectsEveryViolation) {
  try {
    ExperimentConfig::from_json(R"({"datasets": [], "questions": "q.json", "budgets": [0, 2],
                                    "replications": 0, "strategies": ["IS", "XYZ"], "bogus": 1,
                                    "generators": [{"name": "g", "backend": "stochastic", "p0": 2}]})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const auto& v = e.violations();
    EXPECT_GE(v.size(), 5u);
    const std::string all = e.what();
    for (const char* needle : {"datasets", "budget 0", "replications", "XYZ", "bogus", "p0"}) {
      EXPECT_NE(all.find(needle), std::string::npos) << needle;
    }
  }
}

TEST(Config, ParsesFullDocument) {
  const auto c = ExperimentConfig::from_json(
      R"({"datasets": ["a.json"], "questions": "q.json", "master_seed": 9, "replications": 4,
          "executor": {"kind": "remote", "endpoint": "http://127.0.0.1:7687", "timeout_ms": 300},
          "generators": [{"name": "g", "backend": "remote", "endpoint": "http://127.0.0.1:8000",
                          "model": "m", "temperature": 0.2}]})",
      std::string("tok"));
  EXPECT_EQ(c.master_seed, 9u);
  EXPECT_EQ(c.replications, 4u);
  const auto& exec = std::get<RemoteExecutorSpec>(c.executor);
  EXPECT_EQ(exec.timeout_ms, 300);
  EXPECT_EQ(exec.auth_token, "tok");
  const auto& gen = std::get<RemoteCompletionBackend>(c.generators.at(0).backend);
  EXPECT_EQ(gen.auth_token, "tok");
  EXPECT_DOUBLE_EQ(c.generators[0].temperature, 0.2);
}

TEST(Config, PrepareReportsMissingScriptsAndQuestions) {
  auto c = scripted_config();
  c.question_ids = {"crime_easy", "crime_hard", "no_such_question"};
  try {
    prepare_experiment(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string all = e.what();
    EXPECT_NE(all.find("no_such_question"), std::string::npos);
    EXPECT_NE(all.find("no script for question 'crime_hard'"), std::string::npos);
  }
}

TEST(Corpus, ReportsProblems) {
  const auto corpus = QuestionCorpus::from_json(R"([
    {"id": "a", "dataset_id": "crime", "complexity": "Easy", "text": "t"},
    {"id": "a", "dataset_id": "crime", "complexity": "Medium", "text": "t"},
    {"id": "b", "dataset_id": "crime", "complexity": "Extreme", "text": "t"},
    {"id": "c", "dataset_id": "space", "complexity": "Easy", "text": "t"}])");
  const auto problems = corpus.problems(std::set<std::string>{"crime"});
  auto has = [&](const std::string& needle) {
    return std::any_of(problems.begin(), problems.end(),
                       [&](const std::string& p) { return p.find(needle) != std::string::npos; });
  };
  EXPECT_TRUE(has("duplicate question id 'a'"));
  EXPECT_TRUE(has("unknown complexity 'Extreme'"));
  EXPECT_TRUE(has("dataset 'crime' has no Hard question"));
  EXPECT_TRUE(has("unknown dataset 'space'"));
  EXPECT_TRUE(QuestionCorpus::load(fixtures::data_dir() / "questions.json").problems(std::nullopt).empty());
}

TEST(Seeds, DistinctAcrossReplications) {
  const CellKey cell{"crime_easy", "mock", Strategy::IS, 3};
  std::unordered_set<std::uint64_t> seen;
  for (std::uint64_t rep = 0; rep < 1'000'000; ++rep) seen.insert(run_seed(7, cell, rep));
  EXPECT_EQ(seen.size(), 1'000'000u);
  EXPECT_NE(run_seed(7, cell, 0), run_seed(8, cell, 0));
  EXPECT_NE(run_seed(7, cell, 0), run_seed(7, CellKey{"crime_easy", "mock", Strategy::RAS, 3}, 0));
}

TEST(RunLog, RoundTripsRecords) {
  const auto result = run_experiment(scripted_config());
  std::stringstream buffer;
  write_run_log(buffer, result.records);
  EXPECT_EQ(read_run_log(buffer), result.records);
}

TEST(RunLog, CorruptLineIsReportedByNumber) {
  const auto result = run_experiment(scripted_config());
  std::stringstream buffer;
  write_run_log(buffer, result.records);
  auto text = buffer.str();
  text += "{\"question_id\": \"broken\"\n";
  std::stringstream in(text);
  try {
    read_run_log(in);
    FAIL() << "expected RunLogError";
  } catch (const RunLogError& e) {
    EXPECT_EQ(e.line(), 5u);
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos);
  }
}

TEST(Aggregate, FractionsAndBaseline) {
  std::vector<RunRecord> log;
  add_runs(log, "crime", Strategy::IS, 1, 42, 100);
  add_runs(log, "crime", Strategy::RAS, 1, 38, 100);
  add_runs(log, "crime", Strategy::IS, 2, 20, 100);
  const auto stats = aggregate(log, Grouping{});
  std::size_t counted = 0;
  std::optional<double> q1;
  for (const auto& s : stats) {
    if (!s.key.strategy) {
      q1 = s.mean;
      continue;
    }
    counted += s.n_runs;
    if (*s.key.strategy == Strategy::IS && s.key.budget == 1) EXPECT_DOUBLE_EQ(s.mean, 0.42);
    if (*s.key.strategy == Strategy::RAS) EXPECT_DOUBLE_EQ(s.mean, 0.38);
    if (s.key.budget == 2) EXPECT_DOUBLE_EQ(s.mean, 0.20);
  }
  EXPECT_EQ(counted, log.size());
  ASSERT_TRUE(q1.has_value());
  EXPECT_NEAR(*q1, 0.40, 1e-12);
}

TEST(Aggregate, GroupingPoolsDimensions) {
  std::vector<RunRecord> log;
  add_runs(log, "crime", Strategy::IS, 1, 1, 4);
  add_runs(log, "fraud", Strategy::IS, 1, 3, 4);
  const auto pooled = aggregate(log, Grouping::parse("model"));
  const auto it = std::find_if(pooled.begin(), pooled.end(), [](const QerStats& s) { return s.key.strategy; });
  ASSERT_NE(it, pooled.end());
  EXPECT_EQ(it->key.dataset, "*");
  EXPECT_DOUBLE_EQ(it->mean, 0.5);
  EXPECT_EQ(it->n_runs, 8u);
  EXPECT_THROW(Grouping::parse("dataset,colour"), std::invalid_argument);
}

TEST(Trajectory, MissingBudgetIsNamed) {
  std::vector<RunRecord> log;
  add_runs(log, "crime", Strategy::IS, 1, 5, 10);
  add_runs(log, "crime", Strategy::IS, 3, 1, 10);
  try {
    trajectory(log, GroupKey{"crime", "*", "*", std::nullopt, 1}, Strategy::IS);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  add_runs(log, "crime", Strategy::IS, 2, 3, 10);
  const auto curve = trajectory(log, GroupKey{"crime", "*", "*", std::nullopt, 1}, Strategy::IS);
  ASSERT_EQ(curve.points.size(), 3u);
  EXPECT_DOUBLE_EQ(curve.points[1].second, 0.3);
}
