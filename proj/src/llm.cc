#include "claimnorm/llm.h"

#include <algorithm>
#include <cmath>
#include <thread>

#include "claimnorm/hashing.h"
#include "claimnorm/log.h"

namespace claimnorm::llm {

void GenerationConfig::validate() const {
  if (model_id.empty()) throw std::invalid_argument("generation config: model_id is empty");
  if (max_tokens < 1) throw std::invalid_argument("generation config: max_tokens must be >= 1");
  if (!(temperature >= 0)) throw std::invalid_argument("generation config: temperature must be >= 0");
  if (!(timeout_seconds > 0)) throw std::invalid_argument("generation config: timeout must be > 0");
  if (max_retries < 0) throw std::invalid_argument("generation config: max_retries must be >= 0");
}

nlohmann::ordered_json GenerationConfig::to_json() const {
  nlohmann::ordered_json j;
  j["model_id"] = model_id;
  j["max_tokens"] = max_tokens;
  j["temperature"] = temperature;
  j["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  j["timeout_seconds"] = timeout_seconds;
  j["max_retries"] = max_retries;
  return j;
}

GenerationConfig GenerationConfig::from_json(const nlohmann::json& j) {
  GenerationConfig c;
  if (!j.is_object()) throw std::invalid_argument("generation config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "model_id") {
      c.model_id = value.get<std::string>();
    } else if (key == "max_tokens") {
      c.max_tokens = value.get<int>();
    } else if (key == "temperature") {
      c.temperature = value.get<double>();
    } else if (key == "seed") {
      if (!value.is_null()) c.seed = value.get<std::int64_t>();
    } else if (key == "timeout_seconds") {
      c.timeout_seconds = value.get<double>();
    } else if (key == "max_retries") {
      c.max_retries = value.get<int>();
    } else {
      throw std::invalid_argument("generation config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

std::string_view backend_name(BackendKind kind) { return kind == BackendKind::Http ? "http" : "mock"; }

std::shared_ptr<MockBackend> MockBackend::planted(std::map<std::string, std::string> by_prompt_sha) {
  std::shared_ptr<MockBackend> m(new MockBackend(Mode::Planted));
  m->planted_ = std::move(by_prompt_sha);
  return m;
}

std::shared_ptr<MockBackend> MockBackend::echo() { return std::shared_ptr<MockBackend>(new MockBackend(Mode::Echo)); }

std::shared_ptr<MockBackend> MockBackend::constant(std::string text) {
  std::shared_ptr<MockBackend> m(new MockBackend(Mode::Constant));
  m->constant_ = std::move(text);
  return m;
}

void MockBackend::fail_when(std::function<bool(const std::string&)> predicate) {
  fail_when_ = std::move(predicate);
}

std::string echo_claim(std::string_view prompt) {
  static constexpr std::string_view kLinePrefix = prompts::kClaimMarker;
  std::string last;
  std::string first_line;
  std::size_t start = 0;
  while (start < prompt.size()) {
    auto end = prompt.find('\n', start);
    if (end == std::string_view::npos) end = prompt.size();
    const auto line = prompt.substr(start, end - start);
    if (line.starts_with(kLinePrefix)) {
      const auto rest = line.substr(kLinePrefix.size());
      if (rest.find_first_not_of(" \t\r") != std::string_view::npos) last = std::string(line);
    }
    if (first_line.empty() && line.find_first_not_of(" \t\r") != std::string_view::npos) first_line = line;
    start = end + 1;
  }
  return last.empty() ? first_line : last;
}

Completion MockBackend::call(const std::string& prompt, const GenerationConfig&) {
  ++calls_;
  Completion c;
  c.backend = BackendKind::Mock;
  c.prompt_sha = sha256_hex(prompt);
  if (fail_when_ && fail_when_(prompt)) {
    throw BackendError(BackendError::Kind::Transient, "mock backend: injected failure", c.prompt_sha);
  }
  switch (mode_) {
    case Mode::Planted: {
      const auto it = planted_.find(c.prompt_sha);
      if (it == planted_.end()) {
        throw BackendError(BackendError::Kind::Fatal, "mock backend: no planted completion for prompt",
                           c.prompt_sha);
      }
      c.text = it->second;
      break;
    }
    case Mode::Echo:
      c.text = echo_claim(prompt);
      break;
    case Mode::Constant:
      c.text = constant_;
      break;
  }
  return c;
}

RateLimiter::RateLimiter(double requests_per_minute)
    : rate_per_second_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, rate_per_second_)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_per_second_ <= 0) return;
  for (;;) {
    double wait_seconds = 0;
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_per_second_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait_seconds = (1.0 - tokens_) / rate_per_second_;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_seconds));
  }
}

Client::Client(std::shared_ptr<Backend> backend, ClientOptions options)
    : backend_(std::move(backend)),
      options_(options),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options.max_concurrency, 1, 1024))),
      limiter_(options.requests_per_minute) {
  if (!backend_) throw std::invalid_argument("Client needs a backend");
}

Completion Client::complete(const std::string& prompt, const GenerationConfig& config) {
  config.validate();
  const std::string sha = sha256_hex(prompt);
  double backoff = options_.backoff_initial_seconds;
  for (int attempt = 0;; ++attempt) {
    limiter_.acquire();
    slots_.acquire();
    const auto start = std::chrono::steady_clock::now();
    try {
      ++backend_calls_;
      Completion c = backend_->call(prompt, config);
      slots_.release();
      c.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      c.prompt_sha = sha;
      c.cache_hit = false;
      return c;
    } catch (const BackendError& e) {
      slots_.release();
      if (!e.retryable()) throw BackendError(e.kind(), e.what(), sha);
      if (attempt >= config.max_retries) {
        throw BackendError(BackendError::Kind::Exhausted,
                           "gave up after " + std::to_string(attempt + 1) + " attempts: " + e.what(), sha);
      }
      log().warn("prompt {}: attempt {} failed ({}), retrying in {:.2f}s", sha.substr(0, 12), attempt + 1,
                 e.what(), backoff);
    } catch (...) {
      slots_.release();
      throw;
    }
    if (backoff > 0) std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    backoff = std::min(options_.backoff_max_seconds, backoff * options_.backoff_multiplier);
  }
}

Completion Client::complete(const prompts::RenderedPrompt& prompt, const GenerationConfig& config) {
  return complete(prompt.text, config);
}

Completion cached_complete(const prompts::RenderedPrompt& prompt, const GenerationConfig& config,
                           CompletionCache& cache, Client& client) {
  const std::string key = cache_key(prompt.text, config);
  Completion fresh;
  auto [text, hit] = cache.get_or_compute(key, prompt.sha(), config, [&] {
    fresh = client.complete(prompt, config);
    return fresh.text;
  });
  if (!hit) return fresh;
  Completion c;
  c.text = std::move(text);
  c.backend = client.backend_kind();
  c.cache_hit = true;
  c.prompt_sha = prompt.sha();
  return c;
}

}  // namespace claimnorm::llm
