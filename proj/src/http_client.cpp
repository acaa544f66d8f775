#include "http_client.hpp"

#include <httplib.h>

namespace cyscale::detail {

namespace {

struct SplitUrl {
  std::string base;    // scheme://host:port
  std::string prefix;  // path prefix without trailing slash
};

std::optional<SplitUrl> split_url(const std::string& endpoint) {
  constexpr std::string_view scheme = "http://";
  if (endpoint.rfind(scheme, 0) != 0) return std::nullopt;
  const auto host_begin = scheme.size();
  const auto slash = endpoint.find('/', host_begin);
  SplitUrl out;
  out.base = endpoint.substr(0, slash);
  if (out.base.size() == host_begin) return std::nullopt;
  if (slash != std::string::npos) {
    out.prefix = endpoint.substr(slash);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

}  // namespace

bool is_supported_url(const std::string& endpoint) { return split_url(endpoint).has_value(); }

HttpResponse post_json(const std::string& endpoint, const std::string& path,
                       const std::string& body, int timeout_ms,
                       const std::optional<std::string>& bearer_token) {
  auto url = split_url(endpoint);
  if (!url) throw HttpTransportError("unsupported endpoint URL '" + endpoint + "' (expected http://)");

  httplib::Client client(url->base);
  const auto sec = timeout_ms / 1000;
  const auto usec = (timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  client.set_keep_alive(false);

  httplib::Headers headers;
  if (bearer_token && !bearer_token->empty()) {
    headers.emplace("Authorization", "Bearer " + *bearer_token);
  }
  auto result = client.Post(url->prefix + path, headers, body, "application/json");
  if (!result) {
    throw HttpTransportError("request to " + endpoint + path + " failed: " +
                             httplib::to_string(result.error()));
  }
  return HttpResponse{result->status, result->body};
}

}  // namespace cyscale::detail
