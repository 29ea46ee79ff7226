#ifndef LLMENS_GATEWAY_HPP
#define LLMENS_GATEWAY_HPP

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace llmens {

struct GatewayConfig {
  std::string endpoint_url;
  std::string model_name = "gpt-4o-mini";
  double temperature = 1.0;
  int timeout_ms = 30000;
  int max_retries = 3;
  bool cache_enabled = true;
  std::filesystem::path cache_dir = ".llmens-cache";
  int retry_base_ms = 500;  // doubles per attempt, jittered

  void validate() const;
};

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct ChatRequest {
  std::string model;
  double temperature = 1.0;
  std::vector<ChatMessage> messages;
};

// Stable content hash of (model, temperature, messages); doubles as the
// cache filename.
std::string cache_key(const ChatRequest& request);

// OpenAI-compatible chat-completion body for `request`. Credentials never
// appear here; they travel in the Authorization header.
std::string request_body_json(const ChatRequest& request);

struct TransportResult {
  int status = 0;           // HTTP status; 0 = connection failure/timeout
  std::string body;
  std::string error;        // non-empty on transport-level failure
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResult post(const std::string& url, const std::string& body,
                               const std::vector<std::pair<std::string, std::string>>& headers) = 0;
  // Whether completions through this transport need the API credential.
  virtual bool requires_credential() const { return true; }
};

// Real HTTP transport. Reads the API key from LLM_ENS_API_KEY and fails
// fast when it is missing.
std::unique_ptr<Transport> make_http_transport(int timeout_ms);

// Scripted transport for offline tests: replays responses in order and
// records every request. Throws when the script is exhausted.
class MockTransport final : public Transport {
 public:
  struct Scripted {
    int status = 200;
    std::string body;
    bool connection_error = false;

    // Wraps `text` in a minimal chat-completion response body.
    static Scripted completion(const std::string& text);
    static Scripted http_error(int status, const std::string& body = "");
    static Scripted timeout();
    static Scripted raw(int status, const std::string& body);
  };

  explicit MockTransport(std::vector<Scripted> script)
      : script_(std::move(script)) {}

  TransportResult post(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers) override;
  bool requires_credential() const override { return false; }

  int call_count() const { return static_cast<int>(requests_.size()); }
  const std::vector<std::string>& recorded_bodies() const { return requests_; }

 private:
  std::vector<Scripted> script_;
  std::vector<std::string> requests_;
  std::size_t next_ = 0;
  std::mutex mutex_;
};

// Loads a mock script from a JSON file: a list of either strings
// (completion texts) or {"status": int, "body": str} objects.
std::vector<MockTransport::Scripted> load_mock_script(const std::filesystem::path& path);

class GatewayError : public std::runtime_error {
 public:
  enum class Kind { kHttp, kExhausted, kMalformedBody, kMissingCredential, kScriptExhausted };
  GatewayError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Chat-completion client with deterministic on-disk caching and
// exponential-backoff retries on 429/5xx/timeouts. Failures are never
// cached. Thread-safe; cache writes are atomic per key, first writer wins.
class LlmGateway {
 public:
  LlmGateway(GatewayConfig config, std::shared_ptr<Transport> transport);

  // Returns the first completion's message text.
  std::string complete(const ChatRequest& request);

  int network_calls() const { return network_calls_; }
  int cache_hits() const { return cache_hits_; }

  const GatewayConfig& config() const { return config_; }

 private:
  std::optional<std::string> cache_get(const std::string& key) const;
  void cache_put(const std::string& key, const std::string& value) const;

  GatewayConfig config_;
  std::shared_ptr<Transport> transport_;
  std::atomic<int> network_calls_{0};
  std::atomic<int> cache_hits_{0};
};

// Parses choices[0].message.content out of a chat-completion response.
// Throws GatewayError{kMalformedBody} on anything else.
std::string extract_completion_text(const std::string& response_body);

}  // namespace llmens

#endif
