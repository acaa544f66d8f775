// cyscale: validate queries, run scaling experiments, report QER tables and
// pick budgets from error trajectories.
//
// Exit status: 0 success, 1 domain failure, 2 usage or I/O error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cyscale/execution.hpp"
#include "cyscale/golden.hpp"
#include "cyscale/harness.hpp"
#include "cyscale/knee.hpp"
#include "cyscale/report.hpp"
#include "cyscale/validator.hpp"

namespace {

using namespace cyscale;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

std::optional<std::string> auth_token() {
  if (const char* value = std::getenv(kAuthTokenEnv); value && *value) return std::string(value);
  return std::nullopt;
}

struct ValidateArgs {
  std::string schema;
  std::string query;
  std::string file;
};

int cmd_validate(const ValidateArgs& args) {
  std::shared_ptr<const GraphSchema> schema;
  try {
    schema = std::make_shared<const GraphSchema>(GraphSchema::load(args.schema));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  std::string query = args.query;
  if (!args.file.empty()) {
    std::ifstream in(args.file);
    if (!in) {
      std::cerr << "error: cannot read " << args.file << '\n';
      return kUsage;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    query = buffer.str();
  }
  const auto diagnostics = check_query(query, *schema);
  if (diagnostics.empty()) {
    std::cout << "Success\n";
    return kOk;
  }
  for (const auto& d : diagnostics) std::cout << format_diagnostic(d) << '\n';
  return kDomainFailure;
}

struct RunArgs {
  std::string config;
  std::string out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& args) {
  try {
    auto config = ExperimentConfig::load(args.config, auth_token());
    if (args.workers) {
      if (*args.workers < 1) throw ConfigError({"--workers must be at least 1"});
      config.parallelism = *args.workers;
    }
    if (args.seed) config.master_seed = *args.seed;
    const auto result = run_experiment(config, fs::path(args.out));

    std::printf("%-14s %-16s %-3s %6s %6s %10s %10s %6s\n", "question", "generator", "str", "budget", "runs",
                "qer", "std_dev", "aborts");
    for (const auto& c : result.cells) {
      std::printf("%-14s %-16s %-3s %6d %6zu %10.4f %10.4f %6zu%s\n", c.cell.question_id.c_str(),
                  c.cell.generator.c_str(), std::string(to_string(c.cell.strategy)).c_str(), c.cell.budget,
                  c.stats.n_runs, c.stats.mean, c.stats.std_dev, c.aborts, c.unreliable ? "  unreliable" : "");
    }
    std::printf("%zu records, %zu aborts written to %s\n", result.records.size(), result.aborts.size(),
                args.out.c_str());
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}

struct ReportArgs {
  std::string log;
  std::string format;
  std::string group_by = "dataset,model";
  std::string out;
  std::string aborts;
  std::optional<int> budget;
  double threshold = 0.01;
  bool exclude_transport = false;
};

int cmd_report(const ReportArgs& args) {
  const auto format = report_format_from_string(args.format);
  if (!format) {
    std::cerr << "error: unknown format '" << args.format << "' (expected csv, markdown, plotdata)\n";
    return kUsage;
  }
  try {
    const auto grouping = Grouping::parse(args.group_by);
    const auto log = read_run_log(fs::path(args.log));
    if (log.empty()) {
      std::cerr << "error: run log " << args.log << " has no records\n";
      return kDomainFailure;
    }
    std::vector<std::string> warnings;
    const auto stats = aggregate(log, grouping, AggregateOptions{args.exclude_transport}, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

    ReportOptions options;
    options.budget = args.budget;
    if (!args.aborts.empty()) {
      options.unreliable = unreliable_rows(log, read_aborts(args.aborts), grouping, args.threshold);
    }
    if (*format == ReportFormat::PlotData) {
      if (args.out.empty()) {
        std::cerr << "error: plotdata needs --out DIR\n";
        return kUsage;
      }
      for (const auto& path : write_plotdata(stats, args.out)) std::cout << path.string() << '\n';
    } else if (args.out.empty()) {
      const auto rows = build_report_rows(stats, options);
      std::cout << (*format == ReportFormat::Csv ? render_csv(rows) : render_markdown(rows));
    } else {
      emit_report(stats, *format, args.out, options);
    }
    return kOk;
  } catch (const RunLogError& e) {
    std::cerr << "error: corrupt run log " << args.log << ", " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}

struct KneeArgs {
  std::string log;
  std::string curve;
  double cost = 1.0;
  std::string dataset = "*";
  std::string model = "*";
  std::string complexity = "*";
  std::string strategy = "IS";
};

int cmd_knee(const KneeArgs& args) {
  TrajectoryCurve curve;
  try {
    if (!args.curve.empty()) {
      curve = parse_inline_curve(args.curve);
    } else {
      const auto strategy = strategy_from_string(args.strategy);
      if (!strategy) {
        std::cerr << "error: unknown strategy '" << args.strategy << "'\n";
        return kUsage;
      }
      const auto log = read_run_log(fs::path(args.log));
      curve = trajectory(log, GroupKey{args.dataset, args.model, args.complexity, *strategy, 1}, *strategy);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  KneeResult knee;
  try {
    knee = knee_point(curve, args.cost);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomainFailure;
  }
  std::cout << knee.budget << '\n';
  std::printf("%6s %10s %10s %10s\n", "budget", "cost", "qer", "distance");
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto [budget, value] = curve.points[i];
    std::printf("%6d %10.4g %10.6f %10.6f%s\n", budget, budget * args.cost, value, knee.distances[i],
                budget == knee.budget ? "  <- knee" : "");
  }
  if (knee.tie) std::cout << "note: several budgets tie at the maximum distance; the lowest was selected\n";
  return kOk;
}

struct CorpusArgs {
  std::string config;
  std::string questions;
  std::vector<std::string> schemas;
  std::string golden;
  std::string schema_dir;
};

int cmd_corpus_check(const CorpusArgs& args) {
  std::vector<std::string> problems;
  try {
    if (!args.config.empty()) {
      prepare_experiment(ExperimentConfig::load(args.config, auth_token()));
    } else if (!args.questions.empty()) {
      std::set<std::string> datasets;
      for (const auto& path : args.schemas) datasets.insert(GraphSchema::load(path).dataset_id());
      const auto corpus = QuestionCorpus::load(args.questions);
      problems = corpus.problems(args.schemas.empty() ? std::nullopt : std::optional(datasets));
      if (problems.empty()) std::cout << corpus.entries().size() << " questions OK\n";
    }
    if (!args.golden.empty()) {
      const auto cases = load_golden_corpus(args.golden);
      const auto schemas = load_schema_dir(args.schema_dir);
      for (const auto& m : check_golden(cases, schemas)) {
        problems.push_back("golden case " + std::to_string(m.index) + " (" + m.golden.dataset + "): expected " +
                           std::string(to_string(m.golden.expected)) + ", got " +
                           std::string(to_string(m.actual)) + ": " + m.golden.query);
      }
      if (problems.empty()) std::cout << cases.size() << " golden cases agree\n";
    }
  } catch (const ConfigError& e) {
    for (const auto& v : e.violations()) std::cout << v << '\n';
    return kDomainFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  for (const auto& p : problems) std::cout << p << '\n';
  if (problems.empty() && !args.config.empty()) std::cout << "config OK\n";
  return problems.empty() ? kOk : kDomainFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inference-time scaling harness for schema-grounded Cypher generation"};
  app.require_subcommand(1);

  ValidateArgs validate;
  auto* v = app.add_subcommand("validate", "Check one query against a schema");
  v->add_option("--schema", validate.schema, "Schema JSON file")->required();
  auto* query_opt = v->add_option("--query", validate.query, "Query text");
  auto* file_opt = v->add_option("--file", validate.file, "File holding the query");
  query_opt->excludes(file_opt);
  v->callback([&] {
    if (query_opt->count() == 0 && file_opt->count() == 0) throw CLI::RequiredError("--query or --file");
  });

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run an experiment matrix");
  r->add_option("--config", run.config, "Experiment config JSON")->required();
  r->add_option("--out", run.out, "Output directory")->required();
  r->add_option("--workers", run.workers, "Worker threads (overrides config)");
  r->add_option("--seed", run.seed, "Master seed (overrides config)");

  ReportArgs report;
  auto* rep = app.add_subcommand("report", "Aggregate a run log into a report");
  rep->add_option("--log", report.log, "Run log (NDJSON)")->required();
  rep->add_option("--format", report.format, "csv, markdown or plotdata")->required();
  rep->add_option("--group-by", report.group_by, "Comma list of dataset, model, complexity");
  rep->add_option("--out", report.out, "Output file, or directory for plotdata");
  rep->add_option("--aborts", report.aborts, "Abort log used to flag unreliable rows");
  rep->add_option("--abort-threshold", report.threshold, "Abort fraction above which rows are flagged");
  rep->add_option("--budget", report.budget, "Scaled budget n (default: largest in log)");
  rep->add_flag("--exclude-transport", report.exclude_transport, "Drop runs ending in transport errors");

  KneeArgs knee;
  auto* k = app.add_subcommand("knee", "Select a budget at the knee of an error curve");
  auto* log_opt = k->add_option("--log", knee.log, "Run log (NDJSON)");
  auto* curve_opt = k->add_option("--curve", knee.curve, "Inline curve, e.g. 1:0.5,2:0.2,3:0.12");
  log_opt->excludes(curve_opt);
  k->add_option("--cost", knee.cost, "Cost per attempt")->check(CLI::PositiveNumber);
  k->add_option("--dataset", knee.dataset, "Dataset filter for --log");
  k->add_option("--model", knee.model, "Model filter for --log");
  k->add_option("--complexity", knee.complexity, "Complexity filter for --log");
  k->add_option("--strategy", knee.strategy, "IS or RAS for --log");
  k->callback([&] {
    if (log_opt->count() == 0 && curve_opt->count() == 0) throw CLI::RequiredError("--log or --curve");
  });

  CorpusArgs corpus;
  auto* c = app.add_subcommand("corpus-check", "Check question corpus coverage and golden labels");
  auto* config_opt = c->add_option("--config", corpus.config, "Experiment config to cross-check");
  auto* questions_opt = c->add_option("--questions", corpus.questions, "Question corpus JSON");
  config_opt->excludes(questions_opt);
  c->add_option("--schema", corpus.schemas, "Schema files the corpus may reference");
  auto* golden_opt = c->add_option("--golden", corpus.golden, "Golden validator corpus JSON");
  c->add_option("--schema-dir", corpus.schema_dir, "Directory of schemas for --golden")->needs(golden_opt);
  golden_opt->needs(c->get_option("--schema-dir"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (v->parsed()) return cmd_validate(validate);
  if (r->parsed()) return cmd_run(run);
  if (rep->parsed()) return cmd_report(report);
  if (k->parsed()) return cmd_knee(knee);
  return cmd_corpus_check(corpus);
}
