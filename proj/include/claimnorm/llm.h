#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

#include "claimnorm/prompts.h"
#include "json.hpp"

namespace claimnorm::llm {

/// Sampling parameters sent with every request. The defaults are the
/// generation settings used for the published runs (120 tokens, T = 0.6).
struct GenerationConfig {
  std::string model_id = "gpt-3.5-turbo-instruct";
  int max_tokens = 120;
  double temperature = 0.6;
  std::optional<std::int64_t> seed;
  double timeout_seconds = 60;
  int max_retries = 3;

  /// Throws std::invalid_argument for max_tokens < 1, negative temperature,
  /// non-positive timeout or negative max_retries.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults.
  static GenerationConfig from_json(const nlohmann::json& j);
};

enum class BackendKind { Http, Mock };
std::string_view backend_name(BackendKind kind);

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct Completion {
  std::string text;
  BackendKind backend = BackendKind::Mock;
  double latency_seconds = 0;
  std::optional<TokenUsage> token_usage;
  bool cache_hit = false;
  std::string prompt_sha;
};

class BackendError : public std::runtime_error {
 public:
  enum class Kind { Auth, RateLimit, Transient, Exhausted, Fatal };

  BackendError(Kind kind, const std::string& what, std::string prompt_sha = {})
      : std::runtime_error(what), kind_(kind), prompt_sha_(std::move(prompt_sha)) {}

  Kind kind() const { return kind_; }
  const std::string& prompt_sha() const { return prompt_sha_; }
  bool retryable() const { return kind_ == Kind::RateLimit || kind_ == Kind::Transient; }

 private:
  Kind kind_;
  std::string prompt_sha_;
};

/// One completion request against a model. Implementations must be safe to
/// call from several threads.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendKind kind() const = 0;
  /// Throws BackendError on failure.
  virtual Completion call(const std::string& prompt, const GenerationConfig& config) = 0;
};

/// Offline backend. Every mode is a pure function of the prompt.
///  - planted: looks up the SHA-256 of the prompt in a fixed table
///  - echo: returns the last "Normalized claim: <text>" line of the prompt
///    (the first non-empty prompt line when there is none)
///  - constant: returns a fixed string
class MockBackend : public Backend {
 public:
  static std::shared_ptr<MockBackend> planted(std::map<std::string, std::string> by_prompt_sha);
  static std::shared_ptr<MockBackend> echo();
  static std::shared_ptr<MockBackend> constant(std::string text);

  BackendKind kind() const override { return BackendKind::Mock; }
  Completion call(const std::string& prompt, const GenerationConfig& config) override;

  /// Prompts for which the predicate holds fail with a transient error.
  void fail_when(std::function<bool(const std::string&)> predicate);
  std::size_t calls() const { return calls_.load(); }

 private:
  enum class Mode { Planted, Echo, Constant };
  explicit MockBackend(Mode mode) : mode_(mode) {}

  Mode mode_;
  std::map<std::string, std::string> planted_;
  std::string constant_;
  std::function<bool(const std::string&)> fail_when_;
  std::atomic<std::size_t> calls_{0};
};

std::string echo_claim(std::string_view prompt);

enum class ApiStyle { Completions, Chat };

struct HttpOptions {
  /// Scheme, host and port, e.g. "http://127.0.0.1:8000".
  std::string base_url;
  /// Defaults to /v1/completions or /v1/chat/completions by style.
  std::optional<std::string> path;
  ApiStyle style = ApiStyle::Completions;
  std::string api_key;
};

/// JSON completion API client. Sends {model, prompt | messages, max_tokens,
/// temperature[, seed]} and reads choices[0].text or
/// choices[0].message.content. 401/403 map to Auth, 429 to RateLimit,
/// 5xx and network failures to Transient, other statuses to Fatal.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpOptions options);
  BackendKind kind() const override { return BackendKind::Http; }
  Completion call(const std::string& prompt, const GenerationConfig& config) override;

 private:
  HttpOptions options_;
};

nlohmann::json build_request(const std::string& prompt, const GenerationConfig& config, ApiStyle style);
/// Throws BackendError(Fatal) when the body has no completion text.
Completion parse_response_body(std::string_view body, ApiStyle style);

/// Token bucket refilled at rpm / 60 tokens per second; holds at most one
/// second of tokens (minimum 1). rpm <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  double rate_per_second_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mutex_;
};

struct ClientOptions {
  std::size_t max_concurrency = 4;
  double requests_per_minute = 0;
  double backoff_initial_seconds = 1.0;
  double backoff_multiplier = 2.0;
  double backoff_max_seconds = 30.0;
};

/// Wraps a backend with retries (exponential backoff on RateLimit and
/// Transient errors), a process-wide bound on in-flight requests and an
/// optional requests-per-minute limit.
class Client {
 public:
  Client(std::shared_ptr<Backend> backend, ClientOptions options = {});

  /// Throws BackendError: Auth/Fatal immediately, Exhausted after
  /// config.max_retries retries. Errors carry the prompt hash.
  Completion complete(const std::string& prompt, const GenerationConfig& config);
  Completion complete(const prompts::RenderedPrompt& prompt, const GenerationConfig& config);

  BackendKind backend_kind() const { return backend_->kind(); }
  std::size_t backend_calls() const { return backend_calls_.load(); }

 private:
  std::shared_ptr<Backend> backend_;
  ClientOptions options_;
  std::counting_semaphore<1024> slots_;
  RateLimiter limiter_;
  std::atomic<std::size_t> backend_calls_{0};
};

/// SHA-256 over the canonical JSON of {prompt, model_id, max_tokens,
/// temperature, seed}.
std::string cache_key(const std::string& prompt, const GenerationConfig& config);

/// Append-only JSONL store of completions, one
/// {key, prompt_sha, completion_text, config, timestamp} object per line.
/// Each line is written with a single O_APPEND write. Unparseable lines are
/// skipped with a warning. An empty path keeps the cache in memory only.
class CompletionCache {
 public:
  explicit CompletionCache(std::filesystem::path path = {});

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& prompt_sha, const std::string& text,
           const GenerationConfig& config);

  std::size_t size() const;
  std::size_t corrupt_lines() const { return corrupt_lines_; }
  const std::filesystem::path& path() const { return path_; }

  /// Runs `compute` for a missing key while other callers asking for the same
  /// key wait, so each key reaches the backend at most once.
  /// Returns the text and whether it was already cached.
  std::pair<std::string, bool> get_or_compute(const std::string& key, const std::string& prompt_sha,
                                              const GenerationConfig& config,
                                              const std::function<std::string()>& compute);

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::condition_variable done_;
  std::unordered_map<std::string, std::string> entries_;
  std::set<std::string> in_flight_;
  std::size_t corrupt_lines_ = 0;
};

/// Cache lookup first; on a miss the client is called and the result stored.
Completion cached_complete(const prompts::RenderedPrompt& prompt, const GenerationConfig& config,
                           CompletionCache& cache, Client& client);

}  // namespace claimnorm::llm
