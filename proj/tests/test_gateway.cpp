#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>
#include <memory>

#include "llmens/gateway.hpp"

using namespace llmens;
namespace fs = std::filesystem;

namespace {

ChatRequest simple_request(const std::string& content = "hello") {
  ChatRequest request;
  request.model = "gpt-4o-mini";
  request.temperature = 1.0;
  request.messages = {{"user", content}};
  return request;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("llmens-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

GatewayConfig fast_config(const fs::path& cache_dir, bool cache = true) {
  GatewayConfig config;
  config.endpoint_url = "http://mock.invalid/v1/chat/completions";
  config.cache_enabled = cache;
  config.cache_dir = cache_dir;
  config.retry_base_ms = 0;  // no sleeping in tests
  return config;
}

}  // namespace

TEST_CASE("mock transport replays its script and records requests") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{
      MockTransport::Scripted::completion("{1, reason}")});
  TempDir tmp;
  LlmGateway gateway(fast_config(tmp.path), mock);
  CHECK(gateway.complete(simple_request()) == "{1, reason}");
  CHECK(mock->call_count() == 1);
  CHECK(mock->recorded_bodies()[0].find("\"content\":\"hello\"") != std::string::npos);
}

TEST_CASE("script exhaustion raises") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{});
  TempDir tmp;
  LlmGateway gateway(fast_config(tmp.path), mock);
  CHECK_THROWS_AS(gateway.complete(simple_request()), GatewayError);
}

TEST_CASE("identical requests hit the cache with zero network calls") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{
      MockTransport::Scripted::completion("answer")});
  TempDir tmp;
  LlmGateway gateway(fast_config(tmp.path), mock);
  CHECK(gateway.complete(simple_request()) == "answer");
  CHECK(gateway.complete(simple_request()) == "answer");  // second call: cache
  CHECK(mock->call_count() == 1);
  CHECK(gateway.cache_hits() == 1);
  CHECK(gateway.network_calls() == 1);
}

TEST_CASE("the cache persists across gateway instances") {
  TempDir tmp;
  {
    auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{
        MockTransport::Scripted::completion("pinned")});
    LlmGateway gateway(fast_config(tmp.path), mock);
    CHECK(gateway.complete(simple_request()) == "pinned");
  }
  auto empty_mock =
      std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{});
  LlmGateway gateway(fast_config(tmp.path), empty_mock);
  CHECK(gateway.complete(simple_request()) == "pinned");
  CHECK(empty_mock->call_count() == 0);
}

TEST_CASE("different requests use different cache keys") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{
      MockTransport::Scripted::completion("one"),
      MockTransport::Scripted::completion("two")});
  TempDir tmp;
  LlmGateway gateway(fast_config(tmp.path), mock);
  CHECK(gateway.complete(simple_request("a")) == "one");
  CHECK(gateway.complete(simple_request("b")) == "two");
  CHECK(mock->call_count() == 2);
}

TEST_CASE("cache keys are stable content hashes") {
  const std::string key = cache_key(simple_request());
  CHECK(key == cache_key(simple_request()));
  CHECK(key.size() == 16);

  ChatRequest other = simple_request();
  other.temperature = 0.5;
  CHECK(cache_key(other) != key);
  other = simple_request();
  other.model = "other-model";
  CHECK(cache_key(other) != key);
  other = simple_request();
  other.messages.push_back({"assistant", "reply"});
  CHECK(cache_key(other) != key);
}

TEST_CASE("transient failures retry with success on the final attempt") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{
      MockTransport::Scripted::http_error(429),
      MockTransport::Scripted::http_error(429),
      MockTransport::Scripted::completion("third time")});
  TempDir tmp;
  GatewayConfig config = fast_config(tmp.path);
  config.max_retries = 3;
  LlmGateway gateway(config, mock);
  CHECK(gateway.complete(simple_request()) == "third time");
  CHECK(mock->call_count() == 3);
}

TEST_CASE("timeouts also count as transient") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{
      MockTransport::Scripted::timeout(),
      MockTransport::Scripted::completion("recovered")});
  TempDir tmp;
  LlmGateway gateway(fast_config(tmp.path), mock);
  CHECK(gateway.complete(simple_request()) == "recovered");
  CHECK(mock->call_count() == 2);
}

TEST_CASE("retries exhaust into an error") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{
      MockTransport::Scripted::http_error(500),
      MockTransport::Scripted::http_error(503),
      MockTransport::Scripted::http_error(500)});
  TempDir tmp;
  GatewayConfig config = fast_config(tmp.path);
  config.max_retries = 2;
  LlmGateway gateway(config, mock);
  try {
    gateway.complete(simple_request());
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == GatewayError::Kind::kExhausted);
  }
  CHECK(mock->call_count() == 3);
}

TEST_CASE("non-transient HTTP statuses fail immediately") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{
      MockTransport::Scripted::http_error(400, "bad request")});
  TempDir tmp;
  LlmGateway gateway(fast_config(tmp.path), mock);
  try {
    gateway.complete(simple_request());
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == GatewayError::Kind::kHttp);
  }
  CHECK(mock->call_count() == 1);
}

TEST_CASE("malformed bodies error without polluting the cache") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{
      MockTransport::Scripted::raw(200, "{\"unexpected\": true}"),
      MockTransport::Scripted::completion("clean")});
  TempDir tmp;
  LlmGateway gateway(fast_config(tmp.path), mock);
  try {
    gateway.complete(simple_request());
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == GatewayError::Kind::kMalformedBody);
  }
  CHECK(fs::is_empty(tmp.path));
  // The next identical request goes back to the transport.
  CHECK(gateway.complete(simple_request()) == "clean");
  CHECK(mock->call_count() == 2);
}

TEST_CASE("request bodies carry no credentials") {
  const std::string body = request_body_json(simple_request());
  CHECK(body.find("Authorization") == std::string::npos);
  CHECK(body.find("api_key") == std::string::npos);
  CHECK(body.find("\"model\":\"gpt-4o-mini\"") != std::string::npos);
  CHECK(body.find("\"temperature\":1.0") != std::string::npos);
}

TEST_CASE("invalid requests are rejected before any network use") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{});
  TempDir tmp;
  LlmGateway gateway(fast_config(tmp.path), mock);
  ChatRequest request;
  request.model = "m";
  CHECK_THROWS(gateway.complete(request));  // no messages
  request.messages = {{"robot", "hi"}};
  CHECK_THROWS_AS(gateway.complete(request), std::invalid_argument);
  CHECK(mock->call_count() == 0);
}

TEST_CASE("mock scripts load from json files") {
  TempDir tmp;
  const fs::path script = tmp.path / "script.json";
  std::ofstream(script) << R"(["plain text", {"status": 429, "body": "slow down"}])";
  const auto loaded = load_mock_script(script);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].status == 200);
  CHECK(extract_completion_text(loaded[0].body) == "plain text");
  CHECK(loaded[1].status == 429);
  CHECK_THROWS_AS(load_mock_script(tmp.path / "missing.json"), std::runtime_error);
}

TEST_CASE("disabled cache always goes to the transport") {
  auto mock = std::make_shared<MockTransport>(std::vector<MockTransport::Scripted>{
      MockTransport::Scripted::completion("x"),
      MockTransport::Scripted::completion("y")});
  TempDir tmp;
  LlmGateway gateway(fast_config(tmp.path, /*cache=*/false), mock);
  CHECK(gateway.complete(simple_request()) == "x");
  CHECK(gateway.complete(simple_request()) == "y");
  CHECK(mock->call_count() == 2);
}
