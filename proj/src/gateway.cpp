#include "selfqa/gateway.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "selfqa/errors.hpp"
#include "selfqa/util.hpp"

namespace selfqa {

const char* to_string(FinishReason r) {
  switch (r) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "?";
}

RateLimiter::RateLimiter(double per_second)
    : next_(std::chrono::steady_clock::now()),
      interval_(std::chrono::nanoseconds(
          per_second > 0 ? static_cast<int64_t>(1e9 / per_second) : 0)) {}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point wake;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto now = std::chrono::steady_clock::now();
    if (next_ < now) next_ = now;
    wake = next_;
    next_ += interval_;
  }
  std::this_thread::sleep_until(wake);
}

Backend::Backend(BackendConfig config)
    : config_(std::move(config)), limiter_(config_.rate_limit) {
  if (config_.rate_limit <= 0) throw ConfigError("rate_limit must be positive");
  if (config_.max_retries < 0 || config_.max_retries > 10) {
    throw ConfigError("max_retries must be between 0 and 10");
  }
}

GenerationResponse Backend::complete(const GenerationRequest& request) {
  if (request.prompt.empty()) throw ConfigError("prompt must be non-empty");
  if (request.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (!std::isfinite(request.temperature) || request.temperature < 0) {
    throw ConfigError("temperature must be finite and >= 0");
  }

  int last_status = 0;
  std::string last_message;
  auto started = std::chrono::steady_clock::now();
  for (int tries = 0; tries <= config_.max_retries; ++tries) {
    limiter_.acquire();
    try {
      GenerationResponse response = attempt(request);
      response.retries = tries;
      response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - started);
      return response;
    } catch (const TransientFailure& failure) {
      last_status = failure.status;
      last_message = failure.message;
      if (tries < config_.max_retries) {
        std::this_thread::sleep_for(config_.backoff_base * (1 << tries));
      }
    }
  }
  throw TransportError("retries exhausted: " + last_message, last_status);
}

namespace {

// ---------------------------------------------------------------------------
// Mock backend: a pure function of (seed, prompt bytes). Recognizes the
// three prompt shapes and emits scaffolded output that parses cleanly;
// corruption_rate deterministically injects filter-violating items.

constexpr const char* kKnowledgeMarker = "The background knowledge is:\n";
constexpr const char* kAnswerMarker = "Please answer the following question";
constexpr const char* kQuestionLeadin = "content of the article above:\n";
constexpr const char* kCombinedMarker = "Please generate the questions and answers";
constexpr const char* kGenerationMarker = "Please generate questions in the following format";

class MockBackend : public Backend {
 public:
  using Backend::Backend;

 protected:
  GenerationResponse attempt(const GenerationRequest& request) override;

 private:
  uint64_t item_hash(std::string_view knowledge, std::string_view salt, int index) const {
    uint64_t h = fnv1a64(std::to_string(config_.seed));
    h = fnv1a64(knowledge, h);
    h = fnv1a64(salt, h);
    return fnv1a64(std::to_string(index), h);
  }

  bool corrupt(uint64_t h) const {
    return config_.corruption_rate > 0 &&
           static_cast<double>((h >> 16) % 10000) / 10000.0 < config_.corruption_rate;
  }

  std::string make_question(uint64_t h) const {
    return "What does entry " + to_hex(h, 8) + " indicate about subject " +
           to_hex(h >> 32, 4) + "?";
  }

  std::string make_answer(uint64_t h) const {
    return "Entry " + to_hex(h, 8) + " records value " + to_hex(h >> 24, 4) +
           " for subject " + to_hex(h >> 32, 4) + ".";
  }

  void corrupt_pair(uint64_t h, std::string& question, std::string& answer) const {
    switch (h % 3) {
      case 0: {
        size_t pos = question.find("entry");
        question.insert(pos == std::string::npos ? 0 : pos, "this ");
        break;
      }
      case 1:
        answer = "Based on the above article, " + answer;
        break;
      default:
        answer = "Yes.";
        break;
    }
  }
};

std::string_view extract_between(std::string_view text, std::string_view from,
                                 std::string_view until) {
  size_t start = text.find(from);
  if (start == std::string_view::npos) return text;
  start += from.size();
  size_t end = text.find(until, start);
  if (end == std::string_view::npos) end = text.size();
  return text.substr(start, end - start);
}

int extract_count(std::string_view prompt) {
  constexpr std::string_view kLeadin = "generate ";
  size_t pos = prompt.find(kLeadin);
  if (pos == std::string_view::npos) return 10;
  pos += kLeadin.size();
  if (prompt.substr(pos, 4) == "ten ") return 10;
  int n = 0;
  while (pos < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[pos]))) {
    n = n * 10 + (prompt[pos] - '0');
    ++pos;
  }
  return n > 0 ? n : 10;
}

GenerationResponse MockBackend::attempt(const GenerationRequest& request) {
  const std::string& prompt = request.prompt;
  std::string text;

  if (prompt.find(kAnswerMarker) != std::string::npos) {
    std::string_view knowledge =
        trim(extract_between(prompt, kKnowledgeMarker, kAnswerMarker));
    std::string question{trim(extract_between(prompt, kQuestionLeadin, "\n\nPlease answer"))};
    uint64_t h = item_hash(knowledge, question, 0);
    std::string answer = make_answer(h);
    if (corrupt(h)) {
      std::string unused = question;
      corrupt_pair(1 + h % 2, unused, answer);  // answer-side variants only
    }
    text = "Question: " + question + "\nAnswer: " + answer + "\n";
  } else if (prompt.find(kCombinedMarker) != std::string::npos) {
    std::string_view knowledge = trim(extract_between(prompt, kKnowledgeMarker, "\n\nPlease"));
    int n = extract_count(prompt);
    for (int i = 1; i <= n; ++i) {
      uint64_t h = item_hash(knowledge, "pair", i);
      std::string question = make_question(h);
      std::string answer = make_answer(h >> 1);
      if (corrupt(h)) corrupt_pair(h, question, answer);
      text += std::to_string(i) + ". Question: " + question + "\nAnswer: " + answer + "\n";
    }
  } else if (prompt.find(kGenerationMarker) != std::string::npos) {
    std::string_view knowledge = trim(extract_between(prompt, kKnowledgeMarker, "\n\nPlease"));
    int n = extract_count(prompt);
    for (int i = 1; i <= n; ++i) {
      uint64_t h = item_hash(knowledge, "question", i);
      std::string question = make_question(h);
      if (corrupt(h)) {
        std::string unused;
        corrupt_pair(0, question, unused);  // variant 0: demonstrative insertion
      }
      text += std::to_string(i) + ". Question: " + question + "\n";
    }
  } else {
    text = "Echo " + to_hex(fnv1a64(prompt, config_.seed + 0x9e3779b9), 16) + ".\n";
  }

  GenerationResponse response;
  response.prompt_tokens = static_cast<long>(count_words(prompt));
  response.finish_reason = FinishReason::stop;
  // crude token bound: one word per token
  size_t limit = static_cast<size_t>(request.max_tokens);
  if (count_words(text) > limit) {
    size_t words = 0;
    size_t cut = text.size();
    bool in_word = false;
    for (size_t i = 0; i < text.size(); ++i) {
      bool ws = std::isspace(static_cast<unsigned char>(text[i])) != 0;
      if (!ws && !in_word && ++words > limit) {
        cut = i;
        break;
      }
      in_word = !ws;
    }
    text = text.substr(0, cut);
    response.finish_reason = FinishReason::length;
  }
  response.completion_tokens = static_cast<long>(count_words(text));
  response.text = std::move(text);
  return response;
}

// ---------------------------------------------------------------------------
// HTTP backend: POST {endpoint} with the de facto completion wire shape.

struct ParsedEndpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
  size_t scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("endpoint must be an http(s) URL: " + endpoint);
  }
  size_t slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config)
      : Backend(std::move(config)), endpoint_(parse_endpoint(config_.endpoint)) {}

 protected:
  GenerationResponse attempt(const GenerationRequest& request) override {
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(config_.http_timeout);
    client.set_read_timeout(config_.http_timeout);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    nlohmann::json body;
    body["model"] = request.model_id;
    body["prompt"] = request.prompt;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    if (!request.stop.empty()) body["stop"] = request.stop;

    auto res = client.Post(endpoint_.path, headers, body.dump(), "application/json");
    if (!res) {
      throw TransientFailure{0, "connection failed: " + httplib::to_string(res.error())};
    }
    if (res->status == 401 || res->status == 403) {
      throw CredentialError("authentication rejected (status " +
                            std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      throw TransientFailure{res->status, "status " + std::to_string(res->status)};
    }
    if (res->status != 200) {
      throw ProtocolError("unexpected status " + std::to_string(res->status),
                          res->body.substr(0, 200));
    }

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(res->body);
    } catch (const std::exception& e) {
      throw ProtocolError(std::string("response is not JSON: ") + e.what(),
                          res->body.substr(0, 200));
    }
    GenerationResponse response;
    try {
      const auto& choice = j.at("choices").at(0);
      response.text = choice.at("text").get<std::string>();
      std::string reason = choice.value("finish_reason", "stop");
      response.finish_reason =
          reason == "length" ? FinishReason::length : FinishReason::stop;
      if (j.contains("usage")) {
        response.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        response.completion_tokens = j["usage"].value("completion_tokens", 0);
      }
    } catch (const std::exception& e) {
      throw ProtocolError(std::string("response schema mismatch: ") + e.what(),
                          res->body.substr(0, 200));
    }
    return response;
  }

 private:
  ParsedEndpoint endpoint_;
};

}  // namespace

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.kind == BackendKind::mock) return std::make_unique<MockBackend>(config);
  return std::make_unique<HttpBackend>(config);
}

namespace {
BackendConfig recording_config() {
  BackendConfig config;
  config.rate_limit = 1e9;  // the inner backend owns the real limit
  config.max_retries = 0;
  return config;
}
}  // namespace

RecordingBackend::RecordingBackend(Backend& inner,
                                   std::function<void(const GenerationRequest&)> on_request)
    : Backend(recording_config()), inner_(inner), on_request_(std::move(on_request)) {}

GenerationResponse RecordingBackend::attempt(const GenerationRequest& request) {
  if (on_request_) {
    std::lock_guard<std::mutex> lock(mutex_);
    on_request_(request);
  }
  return inner_.complete(request);
}

std::vector<GenerationResponse> complete_batch(Backend& backend,
                                               const std::vector<GenerationRequest>& requests,
                                               int concurrency) {
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
  std::vector<GenerationResponse> responses(requests.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      try {
        responses[i] = backend.complete(requests[i]);
      } catch (const std::exception& e) {
        GenerationResponse& r = responses[i];
        r.finish_reason = FinishReason::error;
        r.error = e.what();
      }
    }
  };
  size_t n_workers = std::min<size_t>(static_cast<size_t>(concurrency), requests.size());
  if (n_workers <= 1) {
    worker();
    return responses;
  }
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return responses;
}

}  // namespace selfqa
