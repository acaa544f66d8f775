#include <gtest/gtest.h>
#include <json.hpp>

#include "cyscale/generation.hpp"
#include "cyscale/validator.hpp"
#include "test_support.hpp"

using namespace cyscale;
using cyscale::fixtures::StubServer;
using nlohmann::json;

namespace {

ReflectionContext context_for(std::shared_ptr<const GraphSchema> schema, std::string question_id = "q1") {
  ReflectionContext ctx;
  ctx.question_id = std::move(question_id);
  ctx.question = "Which accounts transferred money?";
  ctx.schema = std::move(schema);
  return ctx;
}

Attempt failed(std::string query, MessageClass cls, std::string detail) {
  return Attempt{std::move(query), ExecutionMessage{cls, std::move(detail), MessageSource::Embedded}};
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

GeneratorConfig stochastic(double p0, double gamma) {
  return GeneratorConfig{"mock", StochasticBackend{p0, gamma}, 0.9, {}};
}

}  // namespace

TEST(Prompt, InitialContextHasNoReflectionBlocks) {
  const auto ctx = context_for(fixtures::tiny_schema());
  const auto prompt = build_prompt(ctx, true);
  EXPECT_EQ(count(prompt, "Previous attempt"), 0u);
  EXPECT_NE(prompt.find("Question: Which accounts transferred money?"), std::string::npos);
  EXPECT_NE(prompt.find("(:Account)-[:TRANSFERRED]->(:Account)"), std::string::npos);
  EXPECT_NE(prompt.find("Person {name: STRING}"), std::string::npos);
}

TEST(Prompt, FailuresAppearInOrder) {
  auto ctx = context_for(fixtures::tiny_schema());
  ctx.failures.push_back(failed("MATCH (n:Persn) RETURN n", MessageClass::UnknownLabel, "first detail"));
  ctx.failures.push_back(failed("MATCH (n RETURN n", MessageClass::SyntaxError, "second detail"));
  const auto prompt = build_prompt(ctx, true);
  EXPECT_EQ(count(prompt, "Previous attempt"), 2u);
  const auto first = prompt.find("MATCH (n:Persn) RETURN n");
  const auto second = prompt.find("MATCH (n RETURN n");
  ASSERT_NE(first, std::string::npos);
  ASSERT_NE(second, std::string::npos);
  EXPECT_LT(first, second);
  EXPECT_LT(prompt.find("Error (UnknownLabel): first detail"), prompt.find("Error (SyntaxError): second detail"));
  EXPECT_EQ(prompt, build_prompt(ctx, true));
}

TEST(Prompt, ReflectionDisabledHidesFailures) {
  auto ctx = context_for(fixtures::tiny_schema());
  const auto initial = build_prompt(ctx, false);
  ctx.failures.push_back(failed("MATCH (n:Persn) RETURN n", MessageClass::UnknownLabel, "x"));
  EXPECT_EQ(build_prompt(ctx, false), initial);
  EXPECT_NE(build_prompt(ctx, true), initial);
}

TEST(Extract, FencedBlock) {
  EXPECT_EQ(extract_query("Sure!\n```cypher\nMATCH (n:Person) RETURN n.name;\n```\nDone."),
            "MATCH (n:Person) RETURN n.name");
  EXPECT_EQ(extract_query("```\nMATCH (n) RETURN n\n```"), "MATCH (n) RETURN n");
}

TEST(Extract, InlineSentence) {
  EXPECT_EQ(extract_query("Here is the query: MATCH (n) RETURN n. Hope it helps."), "MATCH (n) RETURN n");
}

TEST(Extract, NothingQueryLike) {
  EXPECT_EQ(extract_query("I cannot answer."), std::nullopt);
  EXPECT_EQ(extract_query(""), std::nullopt);
  EXPECT_EQ(extract_query("we should match them and return"), std::nullopt);
}

TEST(Extract, DotInsidePropertyAccessIsKept) {
  EXPECT_EQ(extract_query("MATCH (p:Person) WHERE p.name = 'A. B.' RETURN p.name"),
            "MATCH (p:Person) WHERE p.name = 'A. B.' RETURN p.name");
}

TEST(Stochastic, ForcedDrawsFollowFailureProbability) {
  const Generator gen(stochastic(0.4, 0.5));
  auto ctx = context_for(fixtures::tiny_schema());
  EXPECT_DOUBLE_EQ(gen.failure_probability(ctx, true), 0.4);
  ctx.failures.push_back(failed("x", MessageClass::SyntaxError, "d"));
  ctx.failures.push_back(failed("y", MessageClass::SyntaxError, "d"));
  EXPECT_DOUBLE_EQ(gen.failure_probability(ctx, true), 0.1);
  EXPECT_DOUBLE_EQ(gen.failure_probability(ctx, false), 0.4);
}

TEST(Stochastic, SyntheticQueriesMatchTheirLabel) {
  const auto schema = fixtures::load_dataset("crime");
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    const bool invalid = i % 2 == 0;
    const auto q = synthetic_query(*schema, invalid, rng);
    EXPECT_EQ(!check_query(q, *schema).empty(), invalid) << q;
  }
}

namespace {

double invalid_frequency(const Generator& gen, const ReflectionContext& ctx, bool reflect, int draws) {
  Rng rng(12345);
  int invalid = 0;
  for (int i = 0; i < draws; ++i) {
    if (!check_query(gen.generate(ctx, reflect, 0, rng), *ctx.schema).empty()) ++invalid;
  }
  return static_cast<double>(invalid) / draws;
}

}  // namespace

TEST(Stochastic, LongRunInvalidFrequency) {
  const Generator gen(stochastic(0.4, 1.0));
  const auto ctx = context_for(fixtures::tiny_schema());
  EXPECT_NEAR(invalid_frequency(gen, ctx, true, 1'000'000), 0.4, 0.002);
}

TEST(Stochastic, ReflectionLowersFrequency) {
  const Generator gen(stochastic(0.4, 0.5));
  auto ctx = context_for(fixtures::tiny_schema());
  ctx.failures.push_back(failed("x", MessageClass::SyntaxError, "d"));
  ctx.failures.push_back(failed("y", MessageClass::SyntaxError, "d"));
  EXPECT_NEAR(invalid_frequency(gen, ctx, true, 100'000), 0.1, 0.003);
  EXPECT_NEAR(invalid_frequency(gen, ctx, false, 100'000), 0.4, 0.005);
}

TEST(Stochastic, SameSeedSameQuery) {
  const Generator gen(stochastic(0.5, 1.0));
  const auto ctx = context_for(fixtures::load_dataset("fraud"));
  Rng a(7);
  Rng b(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(gen.generate(ctx, true, 0, a), gen.generate(ctx, true, 0, b));
}

TEST(Scripted, ReplaysByAttemptIndex) {
  const Generator gen(GeneratorConfig{"replay", ScriptedBackend{"s", {{"q1", {"bad", "good"}}}}, 0.9, {}});
  const auto ctx = context_for(fixtures::tiny_schema());
  Rng rng(1);
  EXPECT_EQ(gen.generate(ctx, true, 0, rng), "bad");
  EXPECT_EQ(gen.generate(ctx, true, 1, rng), "good");
  EXPECT_EQ(gen.generate(ctx, true, 7, rng), "good");
  EXPECT_THROW(gen.generate(context_for(fixtures::tiny_schema(), "other"), true, 0, rng), ContractViolation);
}

TEST(Remote, PostsPromptAndExtractsQuery) {
  json seen;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(R"({"choices": [{"text": "```cypher\nMATCH (p:Person) RETURN p.name\n```"}]})",
                    "application/json");
  });
  RemoteCompletionBackend backend;
  backend.endpoint = server.url();
  backend.model = "test-model";
  backend.path = "/v1/completions";
  backend.response_pointer = "/choices/0/text";
  const Generator gen(GeneratorConfig{"remote", backend, 0.7, {}});
  auto ctx = context_for(fixtures::tiny_schema());
  ctx.failures.push_back(failed("MATCH (n:Persn) RETURN n", MessageClass::UnknownLabel, "no such label"));
  Rng rng(1);
  EXPECT_EQ(gen.generate(ctx, true, 1, rng), "MATCH (p:Person) RETURN p.name");
  EXPECT_EQ(seen["model"], "test-model");
  EXPECT_DOUBLE_EQ(seen["temperature"].get<double>(), 0.7);
  EXPECT_EQ(seen["prompt"], build_prompt(ctx, true));
}

TEST(Remote, ProseWithoutQueryYieldsEmptyText) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"text": "I cannot answer."})", "application/json");
  });
  RemoteCompletionBackend backend;
  backend.endpoint = server.url();
  backend.model = "m";
  const Generator gen(GeneratorConfig{"remote", backend, 0.7, {}});
  Rng rng(1);
  EXPECT_EQ(gen.generate(context_for(fixtures::tiny_schema()), true, 0, rng), "");
}

TEST(Remote, FailuresAbortGeneration) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("busy", "text/plain");
  });
  for (const auto& url : {server.url(), fixtures::closed_url()}) {
    RemoteCompletionBackend backend;
    backend.endpoint = url;
    backend.model = "m";
    backend.timeout_ms = 1000;
    const Generator gen(GeneratorConfig{"remote", backend, 0.7, {}});
    Rng rng(1);
    EXPECT_THROW(gen.generate(context_for(fixtures::tiny_schema()), true, 0, rng), GenerationAborted) << url;
  }
}

TEST(Config, RejectsOutOfRangeFields) {
  EXPECT_THROW(check_generator_config(stochastic(1.5, 1.0)), std::invalid_argument);
  EXPECT_THROW(check_generator_config(stochastic(0.5, 0.0)), std::invalid_argument);
  EXPECT_THROW(check_generator_config(stochastic(0.5, 1.2)), std::invalid_argument);
  auto negative = stochastic(0.5, 1.0);
  negative.temperature = -0.1;
  EXPECT_THROW(check_generator_config(negative), std::invalid_argument);
  EXPECT_THROW(check_generator_config(GeneratorConfig{"s", ScriptedBackend{"s", {}}, 0.9, {}}),
               std::invalid_argument);
  EXPECT_THROW(check_generator_config(GeneratorConfig{"r", RemoteCompletionBackend{}, 0.9, {}}),
               std::invalid_argument);
  EXPECT_NO_THROW(check_generator_config(stochastic(0.0, 1.0)));
}
