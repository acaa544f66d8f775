#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace cyscale::detail {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Connection refused, DNS failure, timeout, or an unsupported URL.
class HttpTransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// POSTs a JSON document to `endpoint` + `path`. `endpoint` is
/// "http://host[:port][/prefix]". Each call opens its own connection, so
/// concurrent callers share nothing. The timeout bounds connect, read and
/// write separately.
HttpResponse post_json(const std::string& endpoint, const std::string& path,
                       const std::string& body, int timeout_ms,
                       const std::optional<std::string>& bearer_token);

bool is_supported_url(const std::string& endpoint);

}  // namespace cyscale::detail
