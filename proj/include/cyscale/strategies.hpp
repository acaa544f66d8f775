#pragma once

// Budgeted inference-time scaling loops. Independent Scaling resamples from
// the fixed initial context until the first executable query; Reflection-
// Augmented Scaling feeds every failed (query, message) pair back into the
// next prompt.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cyscale/execution.hpp"
#include "cyscale/generation.hpp"
#include "cyscale/metrics.hpp"
#include "cyscale/schema.hpp"

namespace cyscale {

struct Question {
  std::string id;
  std::string dataset_id;
  std::string complexity;
  std::string text;

  friend bool operator==(const Question&, const Question&) = default;
};

struct StrategyResult {
  RunRecord record;
  /// Final conditioning context. For IS the failure list stays empty.
  ReflectionContext context_final;
  /// A generation call or a remote execution failed for infrastructure
  /// reasons; the record is incomplete and must not enter QER.
  bool aborted = false;
  std::string abort_reason;
};

/// Returns `context` extended by one failure. Throws ContractViolation when
/// `message` is not an error.
ReflectionContext append_failure(ReflectionContext context, std::string query,
                                 ExecutionMessage message);

StrategyResult run_is(const Question& question, std::shared_ptr<const GraphSchema> schema,
                      const Executor& executor, const Generator& generator, int budget,
                      std::uint64_t seed);

StrategyResult run_ras(const Question& question, std::shared_ptr<const GraphSchema> schema,
                       const Executor& executor, const Generator& generator, int budget,
                       std::uint64_t seed);

StrategyResult run_is(const Question& question, std::shared_ptr<const GraphSchema> schema,
                      const ExecutorTarget& target, const GeneratorConfig& generator, int budget,
                      std::uint64_t seed);

StrategyResult run_ras(const Question& question, std::shared_ptr<const GraphSchema> schema,
                       const ExecutorTarget& target, const GeneratorConfig& generator, int budget,
                       std::uint64_t seed);

StrategyResult run_strategy(Strategy strategy, const Question& question,
                            std::shared_ptr<const GraphSchema> schema, const Executor& executor,
                            const Generator& generator, int budget, std::uint64_t seed);

/// Failure probability of IS with a stochastic generator at budgets
/// 1..max_budget: p0^T.
std::vector<double> analytic_is_curve(double p0, int max_budget);

/// Failure probability of RAS at budgets 1..max_budget: the running product
/// of p0 * gamma^(t-1), each factor clamped to [0, 1].
std::vector<double> analytic_ras_curve(double p0, double gamma, int max_budget);

}  // namespace cyscale
