#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace selfqa {

enum class FinishReason { stop, length, error };

const char* to_string(FinishReason r);

struct GenerationRequest {
  std::string prompt;
  std::string model_id;
  double temperature = 1.0;
  int max_tokens = 1024;
  std::vector<std::string> stop;
  std::string request_tag;
};

struct GenerationResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  std::chrono::milliseconds latency{0};
  int retries = 0;
  std::string error;  // populated iff finish_reason == error
};

enum class BackendKind { http, mock };

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string endpoint;                      // http only
  std::string api_key_env = "SELFQA_API_KEY";  // http only
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{250};
  double rate_limit = 50.0;  // requests/second
  uint64_t seed = 0;         // mock only
  double corruption_rate = 0.0;  // mock only
  std::chrono::seconds http_timeout{60};
};

// Serializes request starts so the issue rate never exceeds the limit.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second);
  void acquire();

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_;
  std::chrono::nanoseconds interval_;
};

class Backend {
 public:
  explicit Backend(BackendConfig config);
  virtual ~Backend() = default;

  // Rate-limited, retried completion. Throws TransportError when retries
  // are exhausted, CredentialError on auth failure, ProtocolError on a
  // malformed response body.
  GenerationResponse complete(const GenerationRequest& request);

  const BackendConfig& config() const { return config_; }

 protected:
  // Retryable transient failure (timeout, 429, 5xx).
  struct TransientFailure {
    int status = 0;
    std::string message;
  };

  virtual GenerationResponse attempt(const GenerationRequest& request) = 0;

  BackendConfig config_;

 private:
  RateLimiter limiter_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

// Wraps another backend and reports every request it forwards; used to
// observe prompts in tests and stage counters.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(Backend& inner, std::function<void(const GenerationRequest&)> on_request);

 protected:
  GenerationResponse attempt(const GenerationRequest& request) override;

 private:
  Backend& inner_;
  std::function<void(const GenerationRequest&)> on_request_;
  std::mutex mutex_;
};

// At most `concurrency` requests in flight; result i corresponds to
// request i. A failed request becomes an error-marked slot.
std::vector<GenerationResponse> complete_batch(Backend& backend,
                                               const std::vector<GenerationRequest>& requests,
                                               int concurrency);

}  // namespace selfqa
