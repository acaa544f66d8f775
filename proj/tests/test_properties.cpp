#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cyscale/ast.hpp"
#include "cyscale/golden.hpp"
#include "cyscale/parser.hpp"
#include "cyscale/strategies.hpp"
#include "cyscale/validator.hpp"
#include "test_support.hpp"

using namespace cyscale;

namespace {

std::vector<std::string> valid_queries() {
  std::vector<std::string> out;
  for (const auto& c : load_golden_corpus(fixtures::data_dir() / "corpus" / "validator_corpus.json")) {
    if (c.expected == MessageClass::Success) out.push_back(c.query);
  }
  Rng rng(2024);
  for (const char* name : {"crime", "fraud", "healthcare"}) {
    const auto schema = fixtures::load_dataset(name);
    for (int i = 0; i < 50; ++i) out.push_back(synthetic_query(*schema, false, rng));
  }
  return out;
}

std::vector<std::string> all_corpus_queries() {
  std::vector<std::string> out;
  for (const auto& c : load_golden_corpus(fixtures::data_dir() / "corpus" / "validator_corpus.json")) {
    out.push_back(c.query);
  }
  return out;
}

std::string mutate(const std::string& q, std::mt19937_64& rng) {
  static const std::string alphabet = "()[]{}-<>:.,;'\"`|*=+ abcXYZ019\n\\";
  std::string out = q;
  const int edits = 1 + static_cast<int>(rng() % 4);
  for (int e = 0; e < edits; ++e) {
    const auto op = rng() % 3;
    const auto pos = out.empty() ? 0 : rng() % (out.size() + 1);
    if (op == 0 && !out.empty() && pos < out.size()) {
      out.erase(pos, 1);
    } else if (op == 1) {
      out.insert(pos, 1, alphabet[rng() % alphabet.size()]);
    } else if (!out.empty() && pos < out.size()) {
      out[pos] = alphabet[rng() % alphabet.size()];
    }
  }
  return out;
}

}  // namespace

TEST(Property, GoldenCorpusAgrees) {
  const auto cases = load_golden_corpus(fixtures::data_dir() / "corpus" / "validator_corpus.json");
  const auto mismatches = check_golden(cases, load_schema_dir(fixtures::data_dir() / "schemas"));
  for (const auto& m : mismatches) ADD_FAILURE() << m.index << ": " << m.detail;
  EXPECT_GE(cases.size(), 100u);
}

TEST(Property, CanonicalTextIsAFixedPoint) {
  for (const auto& q : valid_queries()) {
    const auto once = canonical_text(parse_query(q));
    const auto twice = canonical_text(parse_query(once));
    EXPECT_EQ(once, twice) << q;
  }
}

TEST(Property, DiagnosticSpansStayInsideSource) {
  const auto schemas = load_schema_dir(fixtures::data_dir() / "schemas");
  std::mt19937_64 rng(77);
  auto queries = all_corpus_queries();
  const auto base = queries;
  for (int i = 0; i < 3000; ++i) queries.push_back(mutate(base[rng() % base.size()], rng));
  for (const auto& q : queries) {
    for (const auto& [id, schema] : schemas) {
      std::vector<Diagnostic> diagnostics;
      ASSERT_NO_THROW(diagnostics = check_query(q, *schema)) << q;
      for (const auto& d : diagnostics) {
        EXPECT_LE(d.span.begin, d.span.end) << q;
        EXPECT_LE(d.span.end, q.size()) << q;
        EXPECT_NE(d.error_class, MessageClass::Success);
        EXPECT_NE(d.error_class, MessageClass::TransportError);
      }
    }
  }
}

TEST(Property, ClosedFormsAreMonotone) {
  for (double p0 = 0.0; p0 <= 1.0; p0 += 0.05) {
    const auto is = analytic_is_curve(p0, 8);
    for (double gamma = 0.05; gamma <= 1.0; gamma += 0.05) {
      const auto ras = analytic_ras_curve(p0, gamma, 8);
      for (std::size_t t = 0; t < ras.size(); ++t) {
        EXPECT_LE(ras[t], is[t] + 1e-15);
        if (t > 0) EXPECT_LE(ras[t], ras[t - 1] + 1e-15);
      }
    }
    for (std::size_t t = 1; t < is.size(); ++t) EXPECT_LE(is[t], is[t - 1] + 1e-15);
  }
}

namespace {

double monte_carlo(Strategy strategy, double p0, double gamma, int budget, int runs) {
  const auto schema = fixtures::load_dataset("crime");
  const Question q{"crime_easy", "crime", "Easy", "Find all crimes."};
  const Executor executor(EmbeddedTarget{schema});
  const Generator gen(GeneratorConfig{"mock", StochasticBackend{p0, gamma}, 0.9, {}});
  int failures = 0;
  for (int r = 0; r < runs; ++r) {
    const auto out = run_strategy(strategy, q, schema, executor, gen, budget, 1000003ULL * r + 17);
    const auto& rec = out.record;
    EXPECT_LE(rec.attempts.size(), static_cast<std::size_t>(budget));
    for (std::size_t i = 0; i + 1 < rec.attempts.size(); ++i) EXPECT_TRUE(rec.attempts[i].message.is_error());
    if (rec.qee == 0) {
      EXPECT_EQ(rec.attempts.back().message.cls, MessageClass::Success);
    } else {
      EXPECT_EQ(rec.attempts.size(), static_cast<std::size_t>(budget));
    }
    failures += rec.qee;
  }
  return static_cast<double>(failures) / runs;
}

void expect_within_3_sigma(double observed, double expected, int runs) {
  const double sigma = std::sqrt(expected * (1 - expected) / runs);
  EXPECT_NEAR(observed, expected, 3 * sigma) << "expected " << expected;
}

}  // namespace

TEST(Property, MonteCarloMatchesClosedForms) {
  constexpr int kRuns = 10000;
  expect_within_3_sigma(monte_carlo(Strategy::IS, 0.4, 1.0, 5, kRuns), analytic_is_curve(0.4, 5).back(), kRuns);
  expect_within_3_sigma(monte_carlo(Strategy::RAS, 0.4, 0.5, 3, kRuns), analytic_ras_curve(0.4, 0.5, 3).back(),
                        kRuns);
  expect_within_3_sigma(monte_carlo(Strategy::RAS, 0.7, 0.8, 4, kRuns), analytic_ras_curve(0.7, 0.8, 4).back(),
                        kRuns);
}

TEST(Property, SeededRunsAreReproducible) {
  const auto schema = fixtures::load_dataset("fraud");
  const Question q{"fraud_hard", "fraud", "Hard", "?"};
  const Executor executor(EmbeddedTarget{schema});
  const Generator gen(GeneratorConfig{"mock", StochasticBackend{0.8, 0.7}, 0.9, {}});
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    EXPECT_EQ(run_ras(q, schema, executor, gen, 4, seed).record, run_ras(q, schema, executor, gen, 4, seed).record);
  }
}
