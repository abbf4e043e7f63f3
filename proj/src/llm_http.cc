#include <chrono>

#include "claimnorm/llm.h"
#include "httplib.h"

namespace claimnorm::llm {

nlohmann::json build_request(const std::string& prompt, const GenerationConfig& config, ApiStyle style) {
  nlohmann::json body;
  body["model"] = config.model_id;
  if (style == ApiStyle::Chat) {
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  } else {
    body["prompt"] = prompt;
  }
  body["max_tokens"] = config.max_tokens;
  body["temperature"] = config.temperature;
  if (config.seed) body["seed"] = *config.seed;
  return body;
}

Completion parse_response_body(std::string_view body, ApiStyle style) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw BackendError(BackendError::Kind::Fatal, "completion response is not JSON");
  Completion c;
  c.backend = BackendKind::Http;
  try {
    const auto& choice = j.at("choices").at(0);
    c.text = style == ApiStyle::Chat ? choice.at("message").at("content").get<std::string>()
                                     : choice.at("text").get<std::string>();
    if (j.contains("usage") && j.at("usage").is_object()) {
      const auto& usage = j.at("usage");
      c.token_usage = TokenUsage{usage.value("prompt_tokens", 0), usage.value("completion_tokens", 0)};
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendError::Kind::Fatal, std::string("completion response without text: ") + e.what());
  }
  return c;
}

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) throw std::invalid_argument("http backend: base_url is empty");
  if (!options_.path) {
    options_.path = options_.style == ApiStyle::Chat ? "/v1/chat/completions" : "/v1/completions";
  }
}

Completion HttpBackend::call(const std::string& prompt, const GenerationConfig& config) {
  httplib::Client client(options_.base_url);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config.timeout_seconds));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
  const auto result =
      client.Post(*options_.path, headers, build_request(prompt, config, options_.style).dump(), "application/json");
  if (!result) {
    throw BackendError(BackendError::Kind::Transient, "http backend: " + httplib::to_string(result.error()));
  }
  const int status = result->status;
  if (status == 401 || status == 403) {
    throw BackendError(BackendError::Kind::Auth, "http backend: authentication failed (" + std::to_string(status) + ")");
  }
  if (status == 429) throw BackendError(BackendError::Kind::RateLimit, "http backend: rate limited (429)");
  if (status >= 500) {
    throw BackendError(BackendError::Kind::Transient, "http backend: server error " + std::to_string(status));
  }
  if (status < 200 || status >= 300) {
    throw BackendError(BackendError::Kind::Fatal, "http backend: unexpected status " + std::to_string(status));
  }
  return parse_response_body(result->body, options_.style);
}

}  // namespace claimnorm::llm
