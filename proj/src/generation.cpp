#include "cyscale/generation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "http_client.hpp"

namespace cyscale {

using nlohmann::json;

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string property_list(const PropertyMap& props) {
  std::string out = "{";
  bool first = true;
  for (const auto& [key, kind] : props) {
    if (!first) out += ", ";
    first = false;
    out += key + ": " + upper(to_string(kind));
  }
  return out + "}";
}

// Cuts a candidate statement at the first statement or sentence end found
// outside string literals.
std::string_view cut_statement(std::string_view text) {
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == ';') {
      return text.substr(0, i);
    } else if (c == '.' && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
      return text.substr(0, i);
    } else if (c == '\n') {
      const auto next = text.find_first_not_of(" \t\r", i + 1);
      if (next != std::string_view::npos && text[next] == '\n') return text.substr(0, i);
    } else if (text.substr(i, 3) == "```") {
      return text.substr(0, i);
    }
  }
  return text;
}

std::optional<std::string> from_fence(std::string_view raw) {
  const auto open = raw.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto start = open + 3;
  // Skip an info string such as "cypher" when it sits alone on the fence line.
  if (const auto eol = raw.find('\n', start); eol != std::string_view::npos) {
    const auto info = trim(raw.substr(start, eol - start));
    if (std::all_of(info.begin(), info.end(), [](char c) { return ident_char(c) || c == '-'; })) {
      start = eol + 1;
    }
  }
  auto body = raw.substr(start);
  const auto close = body.find("```");
  if (close != std::string_view::npos) body = body.substr(0, close);
  // Only statement terminators end a fenced query; prose stays outside fences.
  char quote = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == ';') {
      body = body.substr(0, i);
      break;
    }
  }
  auto query = trim(body);
  if (query.empty()) return std::nullopt;
  return std::string(query);
}

std::optional<std::size_t> first_keyword(std::string_view raw) {
  static constexpr std::string_view kStarts[] = {"MATCH", "OPTIONAL", "WITH", "RETURN"};
  std::optional<std::size_t> best;
  for (auto kw : kStarts) {
    std::size_t from = 0;
    while (true) {
      const auto at = raw.find(kw, from);
      if (at == std::string_view::npos) break;
      const bool left_ok = at == 0 || !ident_char(raw[at - 1]);
      const auto end = at + kw.size();
      const bool right_ok = end == raw.size() || !ident_char(raw[end]);
      if (left_ok && right_ok) {
        if (!best || at < *best) best = at;
        break;
      }
      from = at + 1;
    }
  }
  return best;
}

}  // namespace

std::string serialize_schema(const GraphSchema& schema) {
  std::string out = "Node properties:\n";
  for (const auto& [label, props] : schema.labels()) {
    out += label + " " + property_list(props) + "\n";
  }
  out += "Relationship properties:\n";
  for (const auto& [type, rel] : schema.relationships()) {
    if (!rel.properties.empty()) out += type + " " + property_list(rel.properties) + "\n";
  }
  out += "The relationships:\n";
  for (const auto& [type, rel] : schema.relationships()) {
    for (const auto& [src, dst] : rel.pairs) {
      out += "(:" + src + ")-[:" + type + "]->(:" + dst + ")\n";
    }
  }
  return out;
}

std::string build_prompt(const ReflectionContext& context, bool include_reflection,
                         const PromptTemplate& tmpl) {
  if (!context.schema) throw ContractViolation("build_prompt: context has no schema");
  std::string prompt = tmpl.header;
  prompt += "\n\nSchema:\n";
  prompt += serialize_schema(*context.schema);
  prompt += "\nQuestion: " + context.question + "\n";
  if (include_reflection) {
    for (std::size_t i = 0; i < context.failures.size(); ++i) {
      const auto& failure = context.failures[i];
      prompt += "\nPrevious attempt " + std::to_string(i + 1) + " failed.\nQuery:\n```cypher\n";
      prompt += failure.query;
      prompt += "\n```\nError (" + std::string(to_string(failure.message.cls)) + "): ";
      prompt += failure.message.detail;
      prompt += "\n" + tmpl.corrective_instruction + "\n";
    }
  }
  prompt += "\nCypher query:\n";
  return prompt;
}

std::optional<std::string> extract_query(std::string_view raw_completion) {
  if (auto fenced = from_fence(raw_completion)) return fenced;
  const auto start = first_keyword(raw_completion);
  if (!start) return std::nullopt;
  const auto query = trim(cut_statement(raw_completion.substr(*start)));
  if (query.empty()) return std::nullopt;
  return std::string(query);
}

void check_generator_config(const GeneratorConfig& config) {
  if (config.name.empty()) throw std::invalid_argument("generator name must be non-empty");
  if (!(config.temperature >= 0.0)) {
    throw std::invalid_argument("generator " + config.name + ": temperature must be >= 0");
  }
  if (const auto* s = std::get_if<StochasticBackend>(&config.backend)) {
    if (!(s->p0 >= 0.0 && s->p0 <= 1.0)) {
      throw std::invalid_argument("generator " + config.name + ": p0 must lie in [0, 1]");
    }
    if (!(s->gamma > 0.0 && s->gamma <= 1.0)) {
      throw std::invalid_argument("generator " + config.name + ": gamma must lie in (0, 1]");
    }
  } else if (const auto* r = std::get_if<RemoteCompletionBackend>(&config.backend)) {
    if (!detail::is_supported_url(r->endpoint)) {
      throw std::invalid_argument("generator " + config.name + ": endpoint must be an http:// URL");
    }
    if (r->model.empty()) throw std::invalid_argument("generator " + config.name + ": model is empty");
    if (r->max_tokens <= 0 || r->timeout_ms <= 0) {
      throw std::invalid_argument("generator " + config.name +
                                  ": max_tokens and timeout_ms must be positive");
    }
  } else {
    const auto& scripted = std::get<ScriptedBackend>(config.backend);
    if (scripted.sequences.empty()) {
      throw std::invalid_argument("generator " + config.name + ": script has no sequences");
    }
    for (const auto& [id, seq] : scripted.sequences) {
      if (seq.empty()) {
        throw std::invalid_argument("generator " + config.name + ": empty script for " + id);
      }
    }
  }
}

namespace {

template <typename Container>
const auto& pick(const Container& items, Rng& rng) {
  const auto index = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(items.size()));
  return items[std::min(index, items.size() - 1)];
}

std::string fresh_name(const std::string& base, const auto& taken) {
  std::string name = base.size() > 1 ? base.substr(0, base.size() - 1) : base + "x";
  while (taken(name)) name += "x";
  return name;
}

struct LabelProp {
  std::string label;
  std::string property;
};

struct RelPair {
  std::string type;
  std::string source;
  std::string target;
};

}  // namespace

std::string synthetic_query(const GraphSchema& schema, bool invalid, Rng& rng) {
  std::vector<LabelProp> props;
  for (const auto& [label, map] : schema.labels()) {
    for (const auto& [key, _] : map) props.push_back({label, key});
  }
  std::vector<RelPair> rels;
  std::vector<RelPair> one_way;
  for (const auto& [type, rel] : schema.relationships()) {
    for (const auto& [s, d] : rel.pairs) {
      rels.push_back({type, s, d});
      if (!rel.allows(d, s)) one_way.push_back({type, s, d});
    }
  }
  if (props.empty()) return invalid ? "RETURN" : "RETURN 1";

  enum class Kind { UnknownLabel, UnknownProperty, Syntax, Reversed, UnknownType, Dangling };
  if (!invalid) {
    const bool use_rel = !rels.empty() && uniform01(rng) < 0.5;
    if (!use_rel) {
      const auto& p = pick(props, rng);
      return "MATCH (n:" + p.label + ") RETURN n." + p.property + " LIMIT 25";
    }
    const auto& r = pick(rels, rng);
    return "MATCH (a:" + r.source + ")-[r:" + r.type + "]->(b:" + r.target +
           ") RETURN a, count(b) AS total ORDER BY total DESC";
  }

  std::vector<Kind> kinds{Kind::UnknownLabel, Kind::UnknownProperty, Kind::Syntax};
  if (!rels.empty()) {
    kinds.push_back(Kind::UnknownType);
    kinds.push_back(Kind::Dangling);
  }
  if (!one_way.empty()) kinds.push_back(Kind::Reversed);

  const auto& p = pick(props, rng);
  switch (pick(kinds, rng)) {
    case Kind::UnknownLabel: {
      const auto label = fresh_name(p.label, [&](const std::string& n) { return schema.has_label(n); });
      return "MATCH (n:" + label + ") RETURN n." + p.property;
    }
    case Kind::UnknownProperty: {
      const auto* map = schema.label_properties(p.label);
      const auto key = fresh_name(p.property, [&](const std::string& n) { return map->count(n) > 0; });
      return "MATCH (n:" + p.label + ") RETURN n." + key;
    }
    case Kind::Syntax:
      return "MATCH (n:" + p.label + " RETURN n." + p.property;
    case Kind::UnknownType: {
      const auto& r = pick(rels, rng);
      const auto type = fresh_name(r.type, [&](const std::string& n) { return schema.has_relationship(n); });
      return "MATCH (a:" + r.source + ")-[:" + type + "]->(b:" + r.target + ") RETURN a";
    }
    case Kind::Dangling: {
      const auto& r = pick(rels, rng);
      return "MATCH (a:" + r.source + ")-[:" + r.type + "]-> RETURN a";
    }
    case Kind::Reversed: {
      const auto& r = pick(one_way, rng);
      return "MATCH (a:" + r.target + ")-[:" + r.type + "]->(b:" + r.source + ") RETURN a, b";
    }
  }
  return "RETURN";
}

Generator::Generator(GeneratorConfig config) : config_(std::move(config)) {
  check_generator_config(config_);
}

double Generator::failure_probability(const ReflectionContext& context,
                                      bool include_reflection) const {
  const auto* s = std::get_if<StochasticBackend>(&config_.backend);
  if (!s) throw ContractViolation("failure_probability: generator " + config_.name + " is not stochastic");
  const auto k = include_reflection ? context.failures.size() : 0;
  return std::clamp(s->p0 * std::pow(s->gamma, static_cast<double>(k)), 0.0, 1.0);
}

std::string Generator::generate(const ReflectionContext& context, bool include_reflection,
                                std::size_t attempt, Rng& rng) const {
  if (std::holds_alternative<StochasticBackend>(config_.backend)) {
    if (!context.schema) throw ContractViolation("generate: context has no schema");
    const bool invalid = uniform01(rng) < failure_probability(context, include_reflection);
    return synthetic_query(*context.schema, invalid, rng);
  }

  if (const auto* scripted = std::get_if<ScriptedBackend>(&config_.backend)) {
    auto it = scripted->sequences.find(context.question_id);
    if (it == scripted->sequences.end()) {
      throw ContractViolation("generate: script " + scripted->sequence_id + " has no sequence for " +
                              context.question_id);
    }
    const auto& seq = it->second;
    return seq[std::min(attempt, seq.size() - 1)];
  }

  const auto& remote = std::get<RemoteCompletionBackend>(config_.backend);
  json request = {{"model", remote.model},
                  {"prompt", build_prompt(context, include_reflection, config_.prompt)},
                  {"temperature", config_.temperature},
                  {"max_tokens", remote.max_tokens}};
  detail::HttpResponse response;
  try {
    response = detail::post_json(remote.endpoint, remote.path, request.dump(), remote.timeout_ms,
                                 remote.auth_token);
  } catch (const detail::HttpTransportError& e) {
    throw GenerationAborted(e.what());
  }
  if (response.status < 200 || response.status >= 300) {
    throw GenerationAborted("completion endpoint returned HTTP " + std::to_string(response.status));
  }
  std::string text;
  try {
    const auto doc = json::parse(response.body);
    text = doc.at(json::json_pointer(remote.response_pointer)).get<std::string>();
  } catch (const json::exception& e) {
    throw GenerationAborted(std::string("malformed completion response: ") + e.what());
  }
  return extract_query(text).value_or("");
}

}  // namespace cyscale
