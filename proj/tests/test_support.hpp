#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>

#include "cyscale/schema.hpp"

namespace cyscale::fixtures {

inline std::filesystem::path data_dir() { return CYSCALE_DATA_DIR; }

inline std::shared_ptr<const GraphSchema> load_dataset(const std::string& name) {
  return std::make_shared<const GraphSchema>(GraphSchema::load(data_dir() / "schemas" / (name + ".json")));
}

/// Person{name}, Account{id}, TRANSFERRED Account->Account.
inline std::shared_ptr<const GraphSchema> tiny_schema() {
  return std::make_shared<const GraphSchema>(GraphSchema::from_json(R"({
    "dataset_id": "tiny",
    "labels": {"Person": {"name": "string"}, "Account": {"id": "string"}},
    "relationships": {"TRANSFERRED": {"pairs": [["Account", "Account"]], "properties": {}},
                      "OWNS": {"pairs": [["Person", "Account"]], "properties": {}}}
  })"));
}

/// Local HTTP server answering every POST with `handler`, for remote
/// executor and completion endpoint tests.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Handler handler) {
    server_.Post(R"(.*)", [h = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
      h(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

/// A port with nothing listening on it.
inline std::string closed_url() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return "http://127.0.0.1:" + std::to_string(ntohs(addr.sin_port));
}

}  // namespace cyscale::fixtures
