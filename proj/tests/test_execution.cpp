#include <atomic>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cyscale/execution.hpp"
#include "cyscale/validator.hpp"
#include "test_support.hpp"

using namespace cyscale;
using cyscale::fixtures::StubServer;
using nlohmann::json;

TEST(Embedded, ValidQuerySucceedsWithEmptyResult) {
  const auto outcome = execute("MATCH (p:Person) RETURN p.name", EmbeddedTarget{fixtures::load_dataset("healthcare")});
  EXPECT_EQ(outcome.message().cls, MessageClass::Success);
  ASSERT_TRUE(outcome.result().has_value());
  EXPECT_TRUE(outcome.result()->empty());
}

TEST(Embedded, UnknownLabelHasNoResult) {
  const auto outcome = execute("MATCH (p:Persn) RETURN p", EmbeddedTarget{fixtures::load_dataset("healthcare")});
  EXPECT_EQ(outcome.message().cls, MessageClass::UnknownLabel);
  EXPECT_FALSE(outcome.result().has_value());
  EXPECT_EQ(outcome.message().source, MessageSource::Embedded);
}

TEST(Embedded, AgreesWithFirstDiagnostic) {
  const auto schema = fixtures::load_dataset("fraud");
  for (const char* q : {"MATCH (a:Nope)-[:X]->(b) RETURN b.zzz", "MATCH (c:Customer) RETURN c.name",
                        "MATCH (a:Account)-[:OWNS]->(c:Customer) RETURN c", "MATCH (a RETURN a"}) {
    const auto diagnostics = check_query(q, *schema);
    const auto expected = diagnostics.empty() ? MessageClass::Success : diagnostics.front().error_class;
    EXPECT_EQ(execute(q, EmbeddedTarget{schema}).message().cls, expected) << q;
  }
}

TEST(Embedded, BlankQueryIsSyntaxError) {
  EXPECT_EQ(execute("  \n", EmbeddedTarget{fixtures::tiny_schema()}).message().cls, MessageClass::SyntaxError);
}

TEST(Target, ChecksInvariants) {
  EXPECT_THROW(Executor(EmbeddedTarget{nullptr}), std::invalid_argument);
  EXPECT_THROW(Executor(RemoteTarget{"http://localhost:1", 0, std::nullopt, "db"}), std::invalid_argument);
  EXPECT_THROW(Executor(RemoteTarget{"ftp://x", 100, std::nullopt, "db"}), std::invalid_argument);
}

struct MappingCase {
  int status;
  std::string body;
  MessageClass expected;
};

TEST(RemoteMapping, FixtureTable) {
  const std::vector<MappingCase> table{
      {200, R"({"rows": []})", MessageClass::Success},
      {200, R"({"rows": [[1, "a"]], "notifications": [{"code": "Neo.ClientNotification.Statement.UnknownLabelWarning"}]})",
       MessageClass::Success},
      {400, R"({"error": {"code": "Neo.ClientError.Statement.SyntaxError", "message": "Invalid input"}})",
       MessageClass::SyntaxError},
      {400, R"({"error": {"code": "UnknownLabel", "message": "x"}})", MessageClass::UnknownLabel},
      {400, R"({"error": {"code": "Custom.Unknown.Label", "message": "x"}})", MessageClass::UnknownLabel},
      {400, R"({"error": {"code": "Custom.UnknownRelationshipType", "message": "x"}})",
       MessageClass::UnknownRelationshipType},
      {400, R"({"error": {"code": "Custom.UnknownPropertyKey", "message": "x"}})", MessageClass::UnknownProperty},
      {400, R"({"error": {"code": "Custom.DirectionMismatch", "message": "x"}})", MessageClass::DirectionViolation},
      {400, R"({"error": {"code": "Custom.MalformedPattern", "message": "x"}})", MessageClass::MalformedPath},
      {400, R"({"error": {"code": "Neo.ClientError.Statement.ArgumentError", "message": "mystery"}})",
       MessageClass::SyntaxError},
      {200, R"({"error": {"code": "Neo.ClientError.Statement.SyntaxError", "message": "x"}})",
       MessageClass::SyntaxError},
      {500, "", MessageClass::TransportError},
      {502, R"({"error": {"code": "Neo.ClientError.Statement.SyntaxError", "message": "x"}})",
       MessageClass::TransportError},
      {200, "not json", MessageClass::TransportError},
      {200, R"([1, 2])", MessageClass::TransportError},
      {200, R"({"unexpected": true})", MessageClass::TransportError},
  };
  for (const auto& c : table) {
    const auto m = classify_remote_response(c.status, c.body);
    EXPECT_EQ(m.cls, c.expected) << c.status << " " << c.body;
    EXPECT_EQ(m.source, MessageSource::Remote);
  }
}

TEST(RemoteMapping, UnmappableKeepsOriginalText) {
  const auto m = classify_remote_response(400, R"({"error": {"code": "X.Y", "message": "strange failure"}})");
  EXPECT_EQ(m.cls, MessageClass::SyntaxError);
  EXPECT_NE(m.detail.find("strange failure"), std::string::npos);
}

TEST(Remote, ForwardsQueryAndParsesRows) {
  json seen;
  std::string auth;
  std::string path;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    path = req.path;
    res.set_content(R"({"rows": [["Ann", 3, 1.5, true, null]]})", "application/json");
  });
  const Executor executor(RemoteTarget{server.url() + "/proxy", 2000, std::string("s3cret"), "crime"});
  const auto outcome = executor.execute("MATCH (p:Person) RETURN p.name");
  EXPECT_EQ(outcome.message().cls, MessageClass::Success);
  ASSERT_TRUE(outcome.result().has_value());
  ASSERT_EQ(outcome.result()->size(), 1u);
  const auto& row = outcome.result()->front();
  ASSERT_EQ(row.size(), 5u);
  EXPECT_EQ(std::get<std::string>(row[0]), "Ann");
  EXPECT_EQ(std::get<std::int64_t>(row[1]), 3);
  EXPECT_EQ(std::get<double>(row[2]), 1.5);
  EXPECT_EQ(std::get<bool>(row[3]), true);
  EXPECT_TRUE(std::holds_alternative<std::monostate>(row[4]));
  EXPECT_EQ(seen["query"], "MATCH (p:Person) RETURN p.name");
  EXPECT_EQ(seen["database"], "crime");
  EXPECT_EQ(auth, "Bearer s3cret");
  EXPECT_EQ(path, "/proxy/execute");
}

TEST(Remote, ErrorDocumentHasNoResult) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content(R"({"error": {"code": "Neo.ClientError.Statement.SyntaxError", "message": "bad"}})",
                    "application/json");
  });
  const auto outcome = execute("MATCH (n RETURN n", RemoteTarget{server.url(), 2000, std::nullopt, "db"});
  EXPECT_EQ(outcome.message().cls, MessageClass::SyntaxError);
  EXPECT_FALSE(outcome.result().has_value());
}

TEST(Remote, UnreachableEndpointIsTransportError) {
  const auto outcome = execute("MATCH (n) RETURN n", RemoteTarget{fixtures::closed_url(), 1000, std::nullopt, "db"});
  EXPECT_EQ(outcome.message().cls, MessageClass::TransportError);
  EXPECT_EQ(outcome.message().source, MessageSource::Remote);
  EXPECT_FALSE(outcome.result().has_value());
}

TEST(Remote, TimeoutBoundsLatency) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    res.set_content(R"({"rows": []})", "application/json");
  });
  const auto start = std::chrono::steady_clock::now();
  const auto outcome = execute("MATCH (n) RETURN n", RemoteTarget{server.url(), 200, std::nullopt, "db"});
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_EQ(outcome.message().cls, MessageClass::TransportError);
  EXPECT_LT(elapsed, std::chrono::milliseconds(1200));
}

TEST(Remote, SharedExecutorAcrossThreads) {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.set_content(R"({"rows": [[1]]})", "application/json");
  });
  const Executor executor(RemoteTarget{server.url(), 2000, std::nullopt, "db"});
  std::atomic<int> successes{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&] {
      for (int j = 0; j < 10; ++j) {
        if (executor.execute("RETURN 1").message().cls == MessageClass::Success) ++successes;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(successes.load(), 40);
  EXPECT_EQ(calls.load(), 40);
}
