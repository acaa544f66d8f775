#include "cyscale/execution.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "cyscale/validator.hpp"
#include "http_client.hpp"

namespace cyscale {

using nlohmann::json;

namespace {

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

ExecutionOutcome execute_embedded(std::string_view query, const EmbeddedTarget& target) {
  const auto diagnostics = check_query(query, *target.schema);
  if (diagnostics.empty()) return ExecutionOutcome::success({}, MessageSource::Embedded);

  const auto& first = diagnostics.front();
  std::string detail = first.detail + " (at offset " + std::to_string(first.span.begin) + ")";
  for (std::size_t i = 1; i < diagnostics.size(); ++i) {
    detail += "\n" + format_diagnostic(diagnostics[i]);
  }
  return ExecutionOutcome::failure(
      ExecutionMessage{first.error_class, std::move(detail), MessageSource::Embedded});
}

ScalarValue to_scalar(const json& cell) {
  switch (cell.type()) {
    case json::value_t::null: return std::monostate{};
    case json::value_t::boolean: return cell.get<bool>();
    case json::value_t::number_integer: return cell.get<std::int64_t>();
    case json::value_t::number_unsigned: return static_cast<std::int64_t>(cell.get<std::uint64_t>());
    case json::value_t::number_float: return cell.get<double>();
    case json::value_t::string: return cell.get<std::string>();
    default: return cell.dump();
  }
}

ExecutionMessage transport(std::string detail) {
  return ExecutionMessage{MessageClass::TransportError, std::move(detail), MessageSource::Remote};
}

ExecutionOutcome execute_remote(std::string_view query, const RemoteTarget& target) {
  json request = {{"query", std::string(query)}, {"database", target.database}};
  detail::HttpResponse response;
  try {
    response = detail::post_json(target.endpoint, "/execute", request.dump(), target.timeout_ms,
                                 target.auth_token);
  } catch (const detail::HttpTransportError& e) {
    return ExecutionOutcome::failure(transport(e.what()));
  }
  auto message = classify_remote_response(response.status, response.body);
  if (message.is_error()) return ExecutionOutcome::failure(std::move(message));

  const auto doc = json::parse(response.body);
  std::vector<ResultRow> rows;
  for (const auto& row : doc.at("rows")) {
    ResultRow out;
    if (row.is_array()) {
      for (const auto& cell : row) out.push_back(to_scalar(cell));
    } else {
      out.push_back(to_scalar(row));
    }
    rows.push_back(std::move(out));
  }
  return ExecutionOutcome::success(std::move(rows), MessageSource::Remote, message.detail);
}

}  // namespace

void check_target(const ExecutorTarget& target) {
  if (const auto* embedded = std::get_if<EmbeddedTarget>(&target)) {
    if (!embedded->schema) throw std::invalid_argument("embedded target requires a loaded schema");
    return;
  }
  const auto& remote = std::get<RemoteTarget>(target);
  if (remote.timeout_ms <= 0) throw std::invalid_argument("remote target timeout must be positive");
  if (!detail::is_supported_url(remote.endpoint)) {
    throw std::invalid_argument("remote target endpoint must be an http:// URL, got '" +
                                remote.endpoint + "'");
  }
}

ExecutionOutcome execute(std::string_view query, const ExecutorTarget& target) {
  if (is_blank(query)) {
    return ExecutionOutcome::failure(
        ExecutionMessage{MessageClass::SyntaxError, "empty query", MessageSource::Embedded});
  }
  if (const auto* embedded = std::get_if<EmbeddedTarget>(&target)) {
    return execute_embedded(query, *embedded);
  }
  return execute_remote(query, std::get<RemoteTarget>(target));
}

std::optional<MessageClass> map_error_code(std::string_view code) {
  if (auto exact = message_class_from_string(code)) return exact;
  const auto text = lower(code);
  auto has = [&](std::string_view word) { return text.find(word) != std::string::npos; };
  if (has("unknown") && has("label")) return MessageClass::UnknownLabel;
  if (has("unknown") && (has("relationship") || has("reltype"))) {
    return MessageClass::UnknownRelationshipType;
  }
  if (has("unknown") && has("property")) return MessageClass::UnknownProperty;
  if (has("direction")) return MessageClass::DirectionViolation;
  if (has("malformed") || has("path") || has("pattern")) return MessageClass::MalformedPath;
  if (has("syntax")) return MessageClass::SyntaxError;
  return std::nullopt;
}

ExecutionMessage classify_remote_response(int status, std::string_view body) {
  const bool ok = status >= 200 && status < 300;
  const bool client_error = status >= 400 && status < 500;
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    return transport("HTTP " + std::to_string(status) + " with unparseable body");
  }
  if (!doc.is_object()) return transport("HTTP " + std::to_string(status) + " with non-object body");

  if (ok && doc.contains("rows") && doc["rows"].is_array()) {
    return ExecutionMessage{MessageClass::Success, "", MessageSource::Remote};
  }
  const auto error = doc.find("error");
  if ((ok || client_error) && error != doc.end() && error->is_object() &&
      error->contains("code") && (*error)["code"].is_string()) {
    const auto code = (*error)["code"].get<std::string>();
    const auto text = error->contains("message") && (*error)["message"].is_string()
                          ? (*error)["message"].get<std::string>()
                          : std::string();
    auto cls = map_error_code(code);
    if (!cls) cls = map_error_code(text);
    if (!cls || *cls == MessageClass::Success) cls = MessageClass::SyntaxError;
    return ExecutionMessage{*cls, code + (text.empty() ? "" : ": " + text), MessageSource::Remote};
  }
  if (error != doc.end()) {
    return transport("HTTP " + std::to_string(status) + ": " + error->dump());
  }
  return transport("HTTP " + std::to_string(status) + " response without rows or error");
}

Executor::Executor(ExecutorTarget target) : target_(std::move(target)) { check_target(target_); }

}  // namespace cyscale
