#include "llmens/gateway.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "llmens/rng.hpp"

namespace llmens {

using json = nlohmann::ordered_json;

void GatewayConfig::validate() const {
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (timeout_ms <= 0) throw std::invalid_argument("timeout_ms must be positive");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (retry_base_ms < 0) throw std::invalid_argument("retry_base_ms must be >= 0");
}

std::string request_body_json(const ChatRequest& request) {
  json body;
  body["model"] = request.model;
  body["temperature"] = request.temperature;
  json messages = json::array();
  for (const ChatMessage& m : request.messages) {
    if (m.role != "system" && m.role != "user" && m.role != "assistant")
      throw std::invalid_argument("invalid message role: " + m.role);
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  if (messages.empty()) throw std::invalid_argument("request needs >= 1 message");
  body["messages"] = std::move(messages);
  return body.dump();
}

std::string cache_key(const ChatRequest& request) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(request_body_json(request))));
  return std::string(hex);
}

std::string extract_completion_text(const std::string& response_body) {
  try {
    const json doc = json::parse(response_body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw GatewayError(GatewayError::Kind::kMalformedBody,
                       std::string("malformed completion body: ") + e.what());
  }
}

// --- HTTP transport -------------------------------------------------------

namespace {

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(int timeout_ms) : timeout_ms_(timeout_ms) {}

  TransportResult post(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers) override {
    // Split "scheme://host[:port]/path".
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
      return {0, "", "invalid endpoint url: " + url};
    const std::size_t path_begin = url.find('/', scheme_end + 3);
    const std::string origin =
        path_begin == std::string::npos ? url : url.substr(0, path_begin);
    const std::string path =
        path_begin == std::string::npos ? "/" : url.substr(path_begin);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_ms_ / 1000, timeout_ms_ % 1000 * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, timeout_ms_ % 1000 * 1000);
    httplib::Headers http_headers;
    for (const auto& [k, v] : headers) http_headers.emplace(k, v);

    httplib::Result result =
        client.Post(path, http_headers, body, "application/json");
    if (!result)
      return {0, "", "transport failure: " + httplib::to_string(result.error())};
    return {result->status, result->body, ""};
  }

 private:
  int timeout_ms_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(int timeout_ms) {
  return std::make_unique<HttpTransport>(timeout_ms);
}

// --- Mock transport -------------------------------------------------------

MockTransport::Scripted MockTransport::Scripted::completion(const std::string& text) {
  json body;
  body["choices"] = json::array(
      {{{"message", {{"role", "assistant"}, {"content", text}}}}});
  return Scripted{200, body.dump(), false};
}

MockTransport::Scripted MockTransport::Scripted::http_error(int status,
                                                            const std::string& body) {
  return Scripted{status, body, false};
}

MockTransport::Scripted MockTransport::Scripted::timeout() {
  return Scripted{0, "", true};
}

MockTransport::Scripted MockTransport::Scripted::raw(int status,
                                                     const std::string& body) {
  return Scripted{status, body, false};
}

TransportResult MockTransport::post(
    const std::string& /*url*/, const std::string& body,
    const std::vector<std::pair<std::string, std::string>>& /*headers*/) {
  std::lock_guard<std::mutex> lock(mutex_);
  requests_.push_back(body);
  if (next_ >= script_.size())
    throw GatewayError(GatewayError::Kind::kScriptExhausted,
                       "mock transport script exhausted");
  const Scripted& s = script_[next_++];
  if (s.connection_error) return {0, "", "scripted timeout"};
  return {s.status, s.body, ""};
}

std::vector<MockTransport::Scripted> load_mock_script(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed mock script: ") + e.what());
  }
  if (!doc.is_array()) throw std::runtime_error("mock script must be a JSON array");
  std::vector<MockTransport::Scripted> script;
  for (const json& item : doc) {
    if (item.is_string()) {
      script.push_back(MockTransport::Scripted::completion(item.get<std::string>()));
    } else if (item.is_object()) {
      script.push_back(MockTransport::Scripted::raw(
          item.value("status", 200), item.value("body", std::string())));
    } else {
      throw std::runtime_error("mock script entries must be strings or objects");
    }
  }
  return script;
}

// --- Gateway ---------------------------------------------------------------

LlmGateway::LlmGateway(GatewayConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.validate();
  if (!transport_) throw std::invalid_argument("gateway needs a transport");
}

std::optional<std::string> LlmGateway::cache_get(const std::string& key) const {
  if (!config_.cache_enabled) return std::nullopt;
  std::ifstream in(config_.cache_dir / key);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void LlmGateway::cache_put(const std::string& key, const std::string& value) const {
  if (!config_.cache_enabled) return;
  namespace fs = std::filesystem;
  fs::create_directories(config_.cache_dir);
  const fs::path target = config_.cache_dir / key;
  if (fs::exists(target)) return;  // first writer wins; values are equal anyway
  const fs::path tmp = config_.cache_dir / (key + ".tmp." +
                                            std::to_string(std::random_device{}()));
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write cache entry " + target.string());
    out << value;
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) fs::remove(tmp, ec);
}

namespace {

bool transient_status(int status) {
  return status == 0 || status == 429 || (status >= 500 && status < 600);
}

}  // namespace

std::string LlmGateway::complete(const ChatRequest& request) {
  const std::string key = cache_key(request);
  if (auto cached = cache_get(key)) {
    cache_hits_ += 1;
    return *cached;
  }

  std::vector<std::pair<std::string, std::string>> headers;
  if (transport_->requires_credential()) {
    const char* api_key = std::getenv("LLM_ENS_API_KEY");
    if (api_key == nullptr || *api_key == '\0')
      throw GatewayError(GatewayError::Kind::kMissingCredential,
                         "LLM_ENS_API_KEY is not set");
    headers.emplace_back("Authorization", std::string("Bearer ") + api_key);
  }

  const std::string body = request_body_json(request);
  static std::atomic<std::uint64_t> jitter_counter{0};
  SeededRng jitter(stream_seed(
      static_cast<std::uint64_t>(
          std::chrono::steady_clock::now().time_since_epoch().count()),
      "jitter", jitter_counter.fetch_add(1)));

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && config_.retry_base_ms > 0) {
      const double backoff = config_.retry_base_ms * std::pow(2.0, attempt - 1);
      const double jittered = backoff * (0.5 + jitter.uniform01());
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long>(jittered)));
    }
    network_calls_ += 1;
    const TransportResult result = transport_->post(config_.endpoint_url, body, headers);
    if (result.status >= 200 && result.status < 300) {
      const std::string text = extract_completion_text(result.body);
      cache_put(key, text);
      return text;
    }
    if (!transient_status(result.status)) {
      throw GatewayError(GatewayError::Kind::kHttp,
                         "completion failed with HTTP " +
                             std::to_string(result.status) + ": " + result.body);
    }
    last_error = result.error.empty()
                     ? "HTTP " + std::to_string(result.status)
                     : result.error;
  }
  throw GatewayError(GatewayError::Kind::kExhausted,
                     "retries exhausted after " +
                         std::to_string(config_.max_retries + 1) +
                         " attempts; last error: " + last_error);
}

}  // namespace llmens
