#include "cyscale/metrics.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace cyscale {

namespace {

constexpr std::array<std::pair<MessageClass, std::string_view>, 8> kClassNames{{
    {MessageClass::Success, "Success"},
    {MessageClass::SyntaxError, "SyntaxError"},
    {MessageClass::UnknownLabel, "UnknownLabel"},
    {MessageClass::UnknownRelationshipType, "UnknownRelationshipType"},
    {MessageClass::UnknownProperty, "UnknownProperty"},
    {MessageClass::MalformedPath, "MalformedPath"},
    {MessageClass::DirectionViolation, "DirectionViolation"},
    {MessageClass::TransportError, "TransportError"},
}};

}  // namespace

std::string_view to_string(MessageClass cls) {
  for (const auto& [value, name] : kClassNames) {
    if (value == cls) return name;
  }
  return "Unknown";
}

std::optional<MessageClass> message_class_from_string(std::string_view name) {
  for (const auto& [value, text] : kClassNames) {
    if (text == name) return value;
  }
  return std::nullopt;
}

std::string_view to_string(MessageSource source) {
  return source == MessageSource::Embedded ? "Embedded" : "Remote";
}

std::optional<MessageSource> message_source_from_string(std::string_view name) {
  if (name == "Embedded") return MessageSource::Embedded;
  if (name == "Remote") return MessageSource::Remote;
  return std::nullopt;
}

ExecutionOutcome ExecutionOutcome::success(std::vector<ResultRow> rows, MessageSource source,
                                           std::string detail) {
  return ExecutionOutcome(std::move(rows),
                          ExecutionMessage{MessageClass::Success, std::move(detail), source});
}

ExecutionOutcome ExecutionOutcome::failure(ExecutionMessage message) {
  if (!message.is_error()) {
    throw ContractViolation("ExecutionOutcome::failure requires an error-class message");
  }
  return ExecutionOutcome(std::nullopt, std::move(message));
}

int classify_executability(const ExecutionMessage& message) {
  return message.is_error() ? 0 : 1;
}

std::string_view to_string(Strategy strategy) {
  return strategy == Strategy::IS ? "IS" : "RAS";
}

std::optional<Strategy> strategy_from_string(std::string_view name) {
  if (name == "IS") return Strategy::IS;
  if (name == "RAS") return Strategy::RAS;
  return std::nullopt;
}

int qee(const RunRecord& record) {
  if (record.attempts.empty()) {
    throw ContractViolation("qee: run record for '" + record.question_id + "' has no attempts");
  }
  return record.attempts.back().message.is_error() ? 1 : 0;
}

void check_record(const RunRecord& record) {
  if (record.budget < 1) throw ContractViolation("run record budget must be positive");
  if (record.attempts.empty()) throw ContractViolation("run record has no attempts");
  if (record.attempts.size() > static_cast<std::size_t>(record.budget)) {
    throw ContractViolation("run record has more attempts than its budget");
  }
  for (std::size_t i = 0; i + 1 < record.attempts.size(); ++i) {
    if (!record.attempts[i].message.is_error()) {
      throw ContractViolation("run record continues after a successful attempt");
    }
  }
  if (record.qee != qee(record)) throw ContractViolation("run record qee disagrees with attempts");
  if (record.final_query != record.attempts.back().query) {
    throw ContractViolation("run record final query is not the last attempt");
  }
}

std::string describe(const GroupKey& key) {
  std::string out = key.dataset + "/" + key.model + "/" + key.complexity + "/";
  out += key.strategy ? std::string(to_string(*key.strategy)) : std::string("Q");
  out += "@" + std::to_string(key.budget);
  return out;
}

QerStats qer_from_values(const std::vector<int>& qee_values, const GroupKey& key) {
  if (qee_values.empty()) throw ContractViolation("qer: no runs for " + describe(key));
  QerStats stats;
  stats.key = key;
  stats.n_runs = qee_values.size();
  for (int v : qee_values) {
    if (v != 0 && v != 1) throw ContractViolation("qer: qee values must be 0 or 1");
    stats.failures += static_cast<std::size_t>(v);
  }
  const auto n = static_cast<double>(stats.n_runs);
  stats.mean = static_cast<double>(stats.failures) / n;
  if (stats.n_runs > 1) {
    // Closed form of sum((x - mean)^2) for 0/1 data.
    const double ss = static_cast<double>(stats.failures) * (1.0 - stats.mean) * (1.0 - stats.mean) +
                      static_cast<double>(stats.n_runs - stats.failures) * stats.mean * stats.mean;
    stats.std_dev = std::sqrt(ss / (n - 1.0));
  }
  return stats;
}

namespace {

bool matches(const std::string& pattern, const std::string& value) {
  return pattern == "*" || pattern == value;
}

}  // namespace

QerStats qer(const std::vector<RunRecord>& records, const GroupKey& key) {
  std::vector<int> values;
  values.reserve(records.size());
  for (const auto& record : records) {
    if (!matches(key.dataset, record.dataset) || !matches(key.model, record.model) ||
        !matches(key.complexity, record.complexity) || record.budget != key.budget ||
        (key.strategy && *key.strategy != record.strategy)) {
      throw ContractViolation("qer: record for '" + record.question_id + "' is outside group " +
                              describe(key));
    }
    values.push_back(qee(record));
  }
  return qer_from_values(values, key);
}

double delta(const QerStats& baseline, const QerStats& scaled) {
  if (baseline.key.dataset != scaled.key.dataset || baseline.key.model != scaled.key.model ||
      baseline.key.complexity != scaled.key.complexity) {
    throw ContractViolation("delta: groups differ beyond strategy/budget: " +
                            describe(baseline.key) + " vs " + describe(scaled.key));
  }
  return baseline.mean - scaled.mean;
}

JointTally tally_joint(const std::vector<RunRecord>& records,
                       const std::optional<std::map<std::string, int>>& accuracy_labels) {
  JointTally tally;
  for (const auto& record : records) {
    std::optional<int> label;
    if (accuracy_labels) {
      if (auto it = accuracy_labels->find(record.question_id); it != accuracy_labels->end()) {
        if (it->second != 0 && it->second != 1) {
          throw ContractViolation("tally_joint: accuracy labels must be 0 or 1");
        }
        label = it->second;
      }
    }
    if (qee(record) == 1) {
      if (label == 1) {
        throw ContractViolation("tally_joint: non-executable record '" + record.question_id +
                                "' labeled accurate");
      }
      ++tally.p00;
    } else if (label == 1) {
      ++tally.p11;
    } else {
      ++tally.p10;
      if (!label) ++tally.unlabeled;
    }
  }
  return tally;
}

}  // namespace cyscale
