#include <mutex>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cyscale/strategies.hpp"
#include "test_support.hpp"

using namespace cyscale;
using cyscale::fixtures::StubServer;
using nlohmann::json;

namespace {

const char* const kBad = "MATCH (p:Persn) RETURN p";
const char* const kGood = "MATCH (p:Person) RETURN p.name";

Question question() { return Question{"q1", "tiny", "Easy", "List people."}; }

Generator scripted(std::vector<std::string> seq) {
  return Generator(GeneratorConfig{"replay", ScriptedBackend{"s", {{"q1", std::move(seq)}}}, 0.9, {}});
}

Executor embedded() { return Executor(EmbeddedTarget{fixtures::tiny_schema()}); }

}  // namespace

TEST(Strategies, StopsAtFirstSuccess) {
  for (auto strategy : {Strategy::IS, Strategy::RAS}) {
    const auto out = run_strategy(strategy, question(), fixtures::tiny_schema(), embedded(),
                                  scripted({kBad, kGood}), 5, 1);
    EXPECT_FALSE(out.aborted);
    ASSERT_EQ(out.record.attempts.size(), 2u);
    EXPECT_EQ(out.record.attempts[0].message.cls, MessageClass::UnknownLabel);
    EXPECT_EQ(out.record.attempts[1].message.cls, MessageClass::Success);
    EXPECT_EQ(out.record.final_query, kGood);
    EXPECT_EQ(out.record.qee, 0);
    EXPECT_EQ(out.record.strategy, strategy);
    EXPECT_EQ(out.record.budget, 5);
    EXPECT_NO_THROW(check_record(out.record));
  }
}

TEST(Strategies, ExhaustedBudgetKeepsLastQuery) {
  const std::vector<std::string> seq{kBad, "MATCH (p:Person RETURN p", "MATCH (p:Person) RETURN p.age"};
  for (auto strategy : {Strategy::IS, Strategy::RAS}) {
    const auto out =
        run_strategy(strategy, question(), fixtures::tiny_schema(), embedded(), scripted(seq), 3, 1);
    ASSERT_EQ(out.record.attempts.size(), 3u);
    EXPECT_EQ(out.record.final_query, seq.back());
    EXPECT_EQ(out.record.qee, 1);
  }
}

TEST(Strategies, ContextGrowsOnlyForReflection) {
  const auto is = run_is(question(), fixtures::tiny_schema(), embedded(), scripted({kBad, kBad, kGood}), 5, 1);
  const auto ras = run_ras(question(), fixtures::tiny_schema(), embedded(), scripted({kBad, kBad, kGood}), 5, 1);
  EXPECT_TRUE(is.context_final.failures.empty());
  ASSERT_EQ(ras.context_final.failures.size(), 2u);
  EXPECT_EQ(ras.context_final.failures[0].query, kBad);
  EXPECT_EQ(ras.context_final.failures[0].message.cls, MessageClass::UnknownLabel);
}

TEST(AppendFailure, RejectsSuccess) {
  ReflectionContext ctx;
  ctx = append_failure(ctx, kBad, ExecutionMessage{MessageClass::UnknownLabel, "d", MessageSource::Embedded});
  EXPECT_EQ(ctx.failures.size(), 1u);
  EXPECT_THROW(append_failure(ctx, kGood, ExecutionMessage{}), ContractViolation);
}

namespace {

struct PromptCapture {
  std::mutex mutex;
  std::vector<std::string> prompts;
};

Generator remote_generator(const std::string& url) {
  RemoteCompletionBackend backend;
  backend.endpoint = url;
  backend.model = "m";
  backend.timeout_ms = 2000;
  return Generator(GeneratorConfig{"remote", backend, 0.9, {}});
}

}  // namespace

TEST(Strategies, RemotePromptsGrowUnderReflection) {
  PromptCapture capture;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(capture.mutex);
    capture.prompts.push_back(json::parse(req.body)["prompt"]);
    res.set_content(json{{"text", std::string("```cypher\n") + kBad + "\n```"}}.dump(), "application/json");
  });
  const auto gen = remote_generator(server.url());

  run_is(question(), fixtures::tiny_schema(), embedded(), gen, 3, 1);
  ASSERT_EQ(capture.prompts.size(), 3u);
  EXPECT_EQ(capture.prompts[0], capture.prompts[1]);
  EXPECT_EQ(capture.prompts[1], capture.prompts[2]);

  capture.prompts.clear();
  run_ras(question(), fixtures::tiny_schema(), embedded(), gen, 3, 1);
  ASSERT_EQ(capture.prompts.size(), 3u);
  EXPECT_LT(capture.prompts[0].size(), capture.prompts[1].size());
  EXPECT_LT(capture.prompts[1].size(), capture.prompts[2].size());
  EXPECT_EQ(capture.prompts[2].rfind(capture.prompts[0].substr(0, capture.prompts[0].size() - 16), 0), 0u);
}

TEST(Strategies, GenerationFailureAbortsRun) {
  const auto gen = remote_generator(fixtures::closed_url());
  const auto out = run_ras(question(), fixtures::tiny_schema(), embedded(), gen, 3, 1);
  EXPECT_TRUE(out.aborted);
  EXPECT_FALSE(out.abort_reason.empty());
}

TEST(Strategies, TransportErrorAbortsRun) {
  const Executor unreachable(RemoteTarget{fixtures::closed_url(), 500, std::nullopt, "db"});
  const auto out = run_is(question(), fixtures::tiny_schema(), unreachable, scripted({kGood}), 3, 1);
  EXPECT_TRUE(out.aborted);
}

TEST(Strategies, BudgetOneStrategiesCoincide) {
  const Generator gen(GeneratorConfig{"mock", StochasticBackend{0.5, 0.5}, 0.9, {}});
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto is = run_is(question(), fixtures::tiny_schema(), embedded(), gen, 1, seed).record;
    auto ras = run_ras(question(), fixtures::tiny_schema(), embedded(), gen, 1, seed).record;
    EXPECT_EQ(is.attempts, ras.attempts);
    EXPECT_EQ(is.qee, ras.qee);
    ras.strategy = is.strategy;
    EXPECT_EQ(is, ras);
  }
}

TEST(Strategies, RejectsNonPositiveBudget) {
  EXPECT_THROW(run_is(question(), fixtures::tiny_schema(), embedded(), scripted({kGood}), 0, 1),
               ContractViolation);
}

TEST(AnalyticCurves, ClosedForms) {
  const auto is = analytic_is_curve(0.4, 5);
  ASSERT_EQ(is.size(), 5u);
  EXPECT_NEAR(is[4], 0.01024, 1e-12);
  const auto ras = analytic_ras_curve(0.4, 0.5, 3);
  EXPECT_NEAR(ras[2], 0.4 * 0.2 * 0.1, 1e-12);
}
