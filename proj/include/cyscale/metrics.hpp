#pragma once

// Executability metrics: execution messages, per-run query execution error
// (QEE), error-rate aggregation (QER) and the executability/accuracy tally.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cyscale {

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class MessageClass {
  Success,
  SyntaxError,
  UnknownLabel,
  UnknownRelationshipType,
  UnknownProperty,
  MalformedPath,
  DirectionViolation,
  TransportError,
};

enum class MessageSource { Embedded, Remote };

std::string_view to_string(MessageClass cls);
std::optional<MessageClass> message_class_from_string(std::string_view name);
std::string_view to_string(MessageSource source);
std::optional<MessageSource> message_source_from_string(std::string_view name);

/// Every class other than Success belongs to the error set.
constexpr bool is_error_class(MessageClass cls) { return cls != MessageClass::Success; }

struct ExecutionMessage {
  MessageClass cls = MessageClass::Success;
  std::string detail;
  MessageSource source = MessageSource::Embedded;

  bool is_error() const { return is_error_class(cls); }
  /// Infrastructure failure rather than an engine verdict on the query.
  bool is_transport() const { return cls == MessageClass::TransportError; }

  friend bool operator==(const ExecutionMessage&, const ExecutionMessage&) = default;
};

using ScalarValue = std::variant<std::monostate, bool, std::int64_t, double, std::string>;
using ResultRow = std::vector<ScalarValue>;

/// The (result, message) pair returned by an executor. A result is present
/// exactly when the message is not an error.
class ExecutionOutcome {
 public:
  static ExecutionOutcome success(std::vector<ResultRow> rows,
                                  MessageSource source = MessageSource::Embedded,
                                  std::string detail = {});
  static ExecutionOutcome failure(ExecutionMessage message);

  const std::optional<std::vector<ResultRow>>& result() const { return result_; }
  const ExecutionMessage& message() const { return message_; }

 private:
  ExecutionOutcome(std::optional<std::vector<ResultRow>> result, ExecutionMessage message)
      : result_(std::move(result)), message_(std::move(message)) {}

  std::optional<std::vector<ResultRow>> result_;
  ExecutionMessage message_;
};

/// E: 1 for a successfully executed query, 0 otherwise.
int classify_executability(const ExecutionMessage& message);

enum class Strategy { IS, RAS };

std::string_view to_string(Strategy strategy);
std::optional<Strategy> strategy_from_string(std::string_view name);

struct Attempt {
  std::string query;
  ExecutionMessage message;

  friend bool operator==(const Attempt&, const Attempt&) = default;
};

/// One strategy execution for one question at one budget.
struct RunRecord {
  std::string question_id;
  std::string dataset;
  std::string model;
  std::string complexity;
  Strategy strategy = Strategy::IS;
  int budget = 1;
  std::uint32_t replication = 0;
  std::uint64_t seed = 0;
  std::vector<Attempt> attempts;
  std::string final_query;
  int qee = 1;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Indicator that the final recorded attempt ended in an error message.
int qee(const RunRecord& record);

/// Checks the structural invariants of a finished record; throws
/// ContractViolation describing the first one broken.
void check_record(const RunRecord& record);

/// Aggregation key. `complexity` (and `dataset`/`model`) may be "*" when
/// the grouping pools over that dimension; a missing strategy marks the
/// pooled single-pass baseline (Q@1).
struct GroupKey {
  std::string dataset;
  std::string model;
  std::string complexity;
  std::optional<Strategy> strategy;
  int budget = 1;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

std::string describe(const GroupKey& key);

struct QerStats {
  GroupKey key;
  double mean = 0.0;
  /// Sample standard deviation of per-run QEE values (n - 1 denominator).
  double std_dev = 0.0;
  std::size_t n_runs = 0;
  std::size_t failures = 0;
};

/// Failure fraction and sample sigma over records that all belong to `key`.
QerStats qer(const std::vector<RunRecord>& records, const GroupKey& key);

/// Same estimator over raw 0/1 QEE values.
QerStats qer_from_values(const std::vector<int>& qee_values, const GroupKey& key);

/// baseline.mean - scaled.mean. Dataset, model and complexity must agree.
double delta(const QerStats& baseline, const QerStats& scaled);

/// Counts over the three defined cells of the executability/accuracy table.
/// There is no cell for a non-executable but accurate query.
struct JointTally {
  std::size_t p11 = 0;
  std::size_t p10 = 0;
  std::size_t p00 = 0;
  /// Executable records without an accuracy label; already counted in p10.
  std::size_t unlabeled = 0;

  std::size_t total() const { return p11 + p10 + p00; }
  friend bool operator==(const JointTally&, const JointTally&) = default;
};

JointTally tally_joint(const std::vector<RunRecord>& records,
                       const std::optional<std::map<std::string, int>>& accuracy_labels);

}  // namespace cyscale
