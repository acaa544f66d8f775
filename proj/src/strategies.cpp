#include "cyscale/strategies.hpp"

#include <algorithm>
#include <cmath>

namespace cyscale {

ReflectionContext append_failure(ReflectionContext context, std::string query,
                                 ExecutionMessage message) {
  if (!message.is_error()) {
    throw ContractViolation("append_failure: message for '" + query + "' is not an error");
  }
  context.failures.push_back(Attempt{std::move(query), std::move(message)});
  return context;
}

namespace {

StrategyResult run_loop(Strategy strategy, const Question& question,
                        std::shared_ptr<const GraphSchema> schema, const Executor& executor,
                        const Generator& generator, int budget, std::uint64_t seed) {
  if (budget < 1) throw ContractViolation("strategy budget must be >= 1");
  if (!schema) throw ContractViolation("strategy run requires a schema");

  StrategyResult result;
  auto& record = result.record;
  record.question_id = question.id;
  record.dataset = question.dataset_id;
  record.model = generator.name();
  record.complexity = question.complexity;
  record.strategy = strategy;
  record.budget = budget;
  record.seed = seed;
  record.qee = 1;

  auto& context = result.context_final;
  context.question_id = question.id;
  context.question = question.text;
  context.schema = std::move(schema);

  const bool reflect = strategy == Strategy::RAS;
  Rng rng(seed);
  for (int t = 0; t < budget; ++t) {
    std::string query;
    try {
      query = generator.generate(context, reflect, static_cast<std::size_t>(t), rng);
    } catch (const GenerationAborted& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      return result;
    }
    auto outcome = executor.execute(query);
    if (outcome.message().is_transport()) {
      result.aborted = true;
      result.abort_reason = outcome.message().detail;
      return result;
    }
    record.attempts.push_back(Attempt{query, outcome.message()});
    record.final_query = query;
    if (!outcome.message().is_error()) {
      record.qee = 0;
      return result;
    }
    if (reflect) context = append_failure(std::move(context), std::move(query), outcome.message());
  }
  return result;
}

}  // namespace

StrategyResult run_strategy(Strategy strategy, const Question& question,
                            std::shared_ptr<const GraphSchema> schema, const Executor& executor,
                            const Generator& generator, int budget, std::uint64_t seed) {
  return run_loop(strategy, question, std::move(schema), executor, generator, budget, seed);
}

StrategyResult run_is(const Question& question, std::shared_ptr<const GraphSchema> schema,
                      const Executor& executor, const Generator& generator, int budget,
                      std::uint64_t seed) {
  return run_loop(Strategy::IS, question, std::move(schema), executor, generator, budget, seed);
}

StrategyResult run_ras(const Question& question, std::shared_ptr<const GraphSchema> schema,
                       const Executor& executor, const Generator& generator, int budget,
                       std::uint64_t seed) {
  return run_loop(Strategy::RAS, question, std::move(schema), executor, generator, budget, seed);
}

StrategyResult run_is(const Question& question, std::shared_ptr<const GraphSchema> schema,
                      const ExecutorTarget& target, const GeneratorConfig& generator, int budget,
                      std::uint64_t seed) {
  return run_is(question, std::move(schema), Executor(target), Generator(generator), budget, seed);
}

StrategyResult run_ras(const Question& question, std::shared_ptr<const GraphSchema> schema,
                       const ExecutorTarget& target, const GeneratorConfig& generator, int budget,
                       std::uint64_t seed) {
  return run_ras(question, std::move(schema), Executor(target), Generator(generator), budget, seed);
}

std::vector<double> analytic_is_curve(double p0, int max_budget) {
  std::vector<double> curve;
  for (int t = 1; t <= max_budget; ++t) curve.push_back(std::pow(p0, t));
  return curve;
}

std::vector<double> analytic_ras_curve(double p0, double gamma, int max_budget) {
  std::vector<double> curve;
  double survive = 1.0;
  for (int t = 1; t <= max_budget; ++t) {
    survive *= std::clamp(p0 * std::pow(gamma, t - 1), 0.0, 1.0);
    curve.push_back(survive);
  }
  return curve;
}

}  // namespace cyscale
