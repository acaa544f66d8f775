#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "cyscale/metrics.hpp"
#include "cyscale/schema.hpp"

namespace cyscale {

/// Validator-backed execution against a loaded schema.
struct EmbeddedTarget {
  std::shared_ptr<const GraphSchema> schema;
};

/// Graph database reached through the HTTP/JSON proxy:
///   POST {endpoint}/execute  {"query": ..., "database": ...}
///   2xx {"rows": [[...], ...]}  or  {"error": {"code": ..., "message": ...}}
struct RemoteTarget {
  std::string endpoint;
  int timeout_ms = 10000;
  std::optional<std::string> auth_token;
  std::string database;
};

using ExecutorTarget = std::variant<EmbeddedTarget, RemoteTarget>;

/// Checks target invariants (schema present, positive timeout, http URL).
/// Throws std::invalid_argument.
void check_target(const ExecutorTarget& target);

/// (r, m) for one query. Embedded: success carries an empty row list, any
/// diagnostic maps to its class with the remaining diagnostics appended to
/// the detail. Remote: network failure or timeout yields TransportError.
/// Blank query text yields SyntaxError without contacting anything.
ExecutionOutcome execute(std::string_view query, const ExecutorTarget& target);

/// Maps a proxy response to a message. Unparseable bodies and responses
/// carrying neither `rows` nor `error` are TransportError.
ExecutionMessage classify_remote_response(int status, std::string_view body);

/// Keyword table used for proxy error codes; returns nullopt when no row
/// matches.
std::optional<MessageClass> map_error_code(std::string_view code);

/// Shareable executor over a fixed target.
class Executor {
 public:
  explicit Executor(ExecutorTarget target);

  ExecutionOutcome execute(std::string_view query) const { return cyscale::execute(query, target_); }
  const ExecutorTarget& target() const { return target_; }

 private:
  ExecutorTarget target_;
};

}  // namespace cyscale
