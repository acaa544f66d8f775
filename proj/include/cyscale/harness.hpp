#pragma once

// Experiment matrix execution, run-log persistence and QER aggregation.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cyscale/execution.hpp"
#include "cyscale/generation.hpp"
#include "cyscale/knee.hpp"
#include "cyscale/metrics.hpp"
#include "cyscale/schema.hpp"
#include "cyscale/strategies.hpp"

namespace cyscale {

/// Environment variable holding the bearer token for remote endpoints.
inline constexpr const char* kAuthTokenEnv = "CYSCALE_AUTH_TOKEN";

inline const std::vector<std::string> kComplexityTiers{"Easy", "Medium", "Hard"};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class QuestionCorpus {
 public:
  QuestionCorpus() = default;
  explicit QuestionCorpus(std::vector<Question> entries) : entries_(std::move(entries)) {}

  static QuestionCorpus from_json(const std::string& text);
  static QuestionCorpus load(const std::filesystem::path& path);

  const std::vector<Question>& entries() const { return entries_; }
  const Question* find(const std::string& id) const;

  /// Every violation: duplicate ids, unknown tiers, datasets missing a tier,
  /// datasets absent from `known_datasets` (when given).
  std::vector<std::string> problems(const std::optional<std::set<std::string>>& known_datasets) const;

 private:
  std::vector<Question> entries_;
};

struct EmbeddedExecutorSpec {};

struct RemoteExecutorSpec {
  std::string endpoint;
  int timeout_ms = 10000;
  std::optional<std::string> auth_token;
};

using ExecutorSpec = std::variant<EmbeddedExecutorSpec, RemoteExecutorSpec>;

struct ExperimentConfig {
  std::vector<std::filesystem::path> datasets;
  std::filesystem::path questions;
  /// Restricts the run to these question ids; empty means every question.
  std::vector<std::string> question_ids;
  std::vector<GeneratorConfig> generators;
  std::vector<Strategy> strategies{Strategy::IS, Strategy::RAS};
  std::vector<int> budgets{1, 2, 3, 4, 5};
  std::uint32_t replications = 128;
  std::uint64_t master_seed = 0;
  ExecutorSpec executor = EmbeddedExecutorSpec{};
  int parallelism = 1;
  /// Per-cell abort fraction above which the cell is flagged unreliable.
  double abort_threshold = 0.01;

  /// Parses the JSON config; `auth_token` is attached to every remote
  /// endpoint. Field-level problems are collected into one ConfigError.
  static ExperimentConfig from_json(const std::string& text,
                                    const std::optional<std::string>& auth_token = std::nullopt);
  static ExperimentConfig load(const std::filesystem::path& path,
                               const std::optional<std::string>& auth_token = std::nullopt);
};

/// Loaded, cross-checked inputs of an experiment.
struct ExperimentPlan {
  std::map<std::string, std::shared_ptr<const GraphSchema>> schemas;
  std::vector<Question> questions;
};

/// Loads every referenced file and returns the plan, or throws ConfigError
/// listing every violation found.
ExperimentPlan prepare_experiment(const ExperimentConfig& config);

struct CellKey {
  std::string question_id;
  std::string generator;
  Strategy strategy = Strategy::IS;
  int budget = 1;

  std::string to_string() const;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

/// Seed for one replication of one cell; stable across platforms and
/// independent of scheduling.
std::uint64_t run_seed(std::uint64_t master_seed, const CellKey& cell, std::uint64_t replication);

struct AbortEntry {
  CellKey cell;
  std::string dataset;
  std::string complexity;
  std::uint32_t replication = 0;
  std::uint64_t seed = 0;
  std::string reason;

  friend bool operator==(const AbortEntry&, const AbortEntry&) = default;
};

struct CellSummary {
  CellKey cell;
  std::string dataset;
  std::string complexity;
  QerStats stats;
  std::size_t aborts = 0;
  bool unreliable = false;
};

struct ExperimentResult {
  std::vector<RunRecord> records;
  std::vector<AbortEntry> aborts;
  std::vector<CellSummary> cells;
};

/// Runs every (question, generator, strategy, budget) cell R times on a
/// worker pool. Records come back in cell-major, replication-minor order
/// regardless of completion order. When `out_dir` is set the run log is
/// streamed to run_log.ndjson in that order as runs finish, followed by
/// aborts.ndjson and summary.json.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

class RunLogError : public std::runtime_error {
 public:
  RunLogError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string record_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& line);
void write_run_log(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_run_log(std::istream& in);
std::vector<RunRecord> read_run_log(const std::filesystem::path& path);

std::string abort_to_json(const AbortEntry& entry);
std::vector<AbortEntry> read_aborts(const std::filesystem::path& path);

/// Dimensions kept distinct when aggregating; the others are pooled as "*".
/// Strategy and budget are always kept.
struct Grouping {
  bool dataset = true;
  bool model = true;
  bool complexity = false;

  /// Parses a comma list drawn from {dataset, model, complexity}.
  static Grouping parse(const std::string& keys);
};

struct AggregateOptions {
  /// Drop runs whose final message is a transport failure.
  bool exclude_transport = false;
};

/// Group key of `record` under `grouping`.
GroupKey group_of(const RunRecord& record, const Grouping& grouping);

/// QerStats per (group, strategy, budget) plus one Q@1 row per group, the
/// mean of IS@1 and RAS@1. Sorted by key.
std::vector<QerStats> aggregate(const std::vector<RunRecord>& log, const Grouping& grouping,
                                const AggregateOptions& options = {},
                                std::vector<std::string>* warnings = nullptr);

/// Mean QER per budget for records matching `key` ("*" matches anything)
/// and `strategy`. Budgets must run 1..max without gaps.
TrajectoryCurve trajectory(const std::vector<RunRecord>& log, const GroupKey& key, Strategy strategy);

}  // namespace cyscale
