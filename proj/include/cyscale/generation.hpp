#pragma once

// Conditional query generation: prompt construction with schema injection
// and reflection blocks, query extraction from raw completions, and the
// generator backends (remote completion endpoint, scripted replay,
// stochastic mock).

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cyscale/metrics.hpp"
#include "cyscale/schema.hpp"

namespace cyscale {

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) from the top 53 bits of one engine output, so the
/// stream is identical across standard libraries.
double uniform01(Rng& rng);

/// Conditioning context: the question, the schema, and the failed attempts
/// accumulated so far (append-only, every message an error).
struct ReflectionContext {
  std::string question_id;
  std::string question;
  std::shared_ptr<const GraphSchema> schema;
  std::vector<Attempt> failures;
};

struct PromptTemplate {
  std::string header =
      "Task: Generate a Cypher statement to query a graph database.\n"
      "Instructions:\n"
      "Use only the node labels, relationship types and properties provided in the schema.\n"
      "Respect the relationship directions shown in the schema.\n"
      "Do not include any explanations or apologies in your response.\n"
      "Return only the Cypher statement inside a ```cypher code block.";
  std::string corrective_instruction =
      "The previous query failed with the following error; produce a corrected query.";
};

/// Node properties / relationship properties / relationship list rendering.
std::string serialize_schema(const GraphSchema& schema);

/// Header + schema + question, then (when `include_reflection`) one block
/// per recorded failure in chronological order.
std::string build_prompt(const ReflectionContext& context, bool include_reflection,
                         const PromptTemplate& tmpl = {});

/// First fenced code block if any, else the text from the first upper-case
/// MATCH/OPTIONAL/WITH/RETURN keyword up to the end of the sentence or
/// statement. nullopt when nothing query-like is present.
std::optional<std::string> extract_query(std::string_view raw_completion);

struct RemoteCompletionBackend {
  std::string endpoint;
  std::string model;
  int max_tokens = 512;
  int timeout_ms = 60000;
  std::optional<std::string> auth_token;
  /// Endpoint shape adapters: request path and JSON pointer to the
  /// completion text in the response.
  std::string path = "/generate";
  std::string response_pointer = "/text";
};

/// Fixed per-question query sequences, replayed by attempt index; the last
/// entry repeats once a sequence is exhausted.
struct ScriptedBackend {
  std::string sequence_id;
  std::map<std::string, std::vector<std::string>> sequences;
};

/// Synthetic generator: the attempt is invalid with probability
/// p0 * gamma^k, k = number of failures visible in the prompt.
struct StochasticBackend {
  double p0 = 0.4;
  double gamma = 1.0;
};

using GeneratorBackend = std::variant<RemoteCompletionBackend, ScriptedBackend, StochasticBackend>;

struct GeneratorConfig {
  std::string name;
  GeneratorBackend backend;
  double temperature = 0.9;
  PromptTemplate prompt;
};

/// Throws std::invalid_argument naming the first out-of-range field.
void check_generator_config(const GeneratorConfig& config);

/// Remote completion failures: infrastructure, not a property of the model.
class GenerationAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Schema-derived template query; `invalid` selects one of the error
/// templates (unknown label/type/property, reversed direction, syntax,
/// dangling relationship).
std::string synthetic_query(const GraphSchema& schema, bool invalid, Rng& rng);

class Generator {
 public:
  explicit Generator(GeneratorConfig config);

  /// One sample q ~ p(. | C). `attempt` is the zero-based attempt index in
  /// the run; with `include_reflection` false the failures in `context`
  /// are invisible to the backend.
  std::string generate(const ReflectionContext& context, bool include_reflection,
                       std::size_t attempt, Rng& rng) const;

  /// Stochastic backend only: p0 * gamma^k clamped to [0, 1].
  double failure_probability(const ReflectionContext& context, bool include_reflection) const;

  const GeneratorConfig& config() const { return config_; }
  const std::string& name() const { return config_.name; }

 private:
  GeneratorConfig config_;
};

}  // namespace cyscale
