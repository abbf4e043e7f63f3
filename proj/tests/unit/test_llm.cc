#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "claimnorm/hashing.h"
#include "claimnorm/llm.h"
#include "doctest.h"
#include "httplib.h"

using namespace claimnorm::llm;
using claimnorm::prompts::PromptKind;

namespace {

ClientOptions fast_retries() {
  ClientOptions o;
  o.backoff_initial_seconds = 0;
  return o;
}

std::filesystem::path temp_file(const std::string& name) {
  auto path = std::filesystem::temp_directory_path() / ("claimnorm_" + name);
  std::filesystem::remove(path);
  return path;
}

class ThrowingBackend : public Backend {
 public:
  explicit ThrowingBackend(BackendError::Kind kind) : kind_(kind) {}
  BackendKind kind() const override { return BackendKind::Http; }
  Completion call(const std::string&, const GenerationConfig&) override {
    ++calls;
    throw BackendError(kind_, "scripted failure");
  }
  std::atomic<int> calls{0};

 private:
  BackendError::Kind kind_;
};

// Local completion endpoint. Counts requests and the peak number in flight.
struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  std::atomic<int> requests{0};
  std::atomic<int> status{200};
  std::atomic<int> delay_ms{0};
  std::mutex mutex;
  std::string last_body;
  std::string last_auth;

  StubServer() {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      const int now = ++in_flight;
      int prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {}
      if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms.load()));
      {
        std::lock_guard lock(mutex);
        last_body = req.body;
        last_auth = req.get_header_value("Authorization");
      }
      res.status = status.load();
      if (req.path == "/v1/chat/completions") {
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Normalized claim: Chat reply."}}]})",
                        "application/json");
      } else {
        res.set_content(
            R"({"choices":[{"text":"Normalized claim: Stub reply."}],"usage":{"prompt_tokens":12,"completion_tokens":5}})",
            "application/json");
      }
      --in_flight;
    };
    server.Post("/v1/completions", handler);
    server.Post("/v1/chat/completions", handler);
    server.new_task_queue = [] { return new httplib::ThreadPool(32); };
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~StubServer() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("generation config defaults match the published settings") {
  const GenerationConfig config;
  CHECK(config.max_tokens == 120);
  CHECK(config.temperature == 0.6);
  CHECK_FALSE(config.seed.has_value());
  CHECK_NOTHROW(config.validate());

  GenerationConfig bad;
  bad.max_tokens = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.temperature = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const auto parsed = GenerationConfig::from_json({{"temperature", 0.0}, {"seed", 7}});
  CHECK(parsed.temperature == 0.0);
  CHECK(parsed.seed == 7);
  CHECK(parsed.max_tokens == 120);
  CHECK(GenerationConfig::from_json(nlohmann::json::parse(config.to_json().dump())).to_json() == config.to_json());
  CHECK_THROWS(GenerationConfig::from_json({{"top_p", 0.9}}));
}

TEST_CASE("mock backend modes") {
  const GenerationConfig config;
  const std::string prompt = "Post: honey\nNormalized claim:\n";
  auto planted = MockBackend::planted({{claimnorm::sha256_hex(prompt), "Normalized claim: X"}});
  CHECK(planted->call(prompt, config).text == "Normalized claim: X");
  try {
    planted->call("other prompt", config);
    FAIL("expected an error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::Fatal);
    CHECK(e.prompt_sha() == claimnorm::sha256_hex("other prompt"));
  }

  CHECK(MockBackend::constant("the")->call(prompt, config).text == "the");
  CHECK(echo_claim("Post: a\nNormalized claim: First.\n\nPost: b\nNormalized claim: Second one.\n\nPost: c\n"
                   "Normalized claim:\n") == "Normalized claim: Second one.");
  CHECK(echo_claim("\n\nJust a post.\n\nsummarize\n") == "Just a post.");

  auto echo = MockBackend::echo();
  GenerationConfig other = config;
  other.temperature = 1.3;
  other.seed = 99;
  CHECK(echo->call(prompt + "Normalized claim: Y.\n", config).text ==
        echo->call(prompt + "Normalized claim: Y.\n", other).text);
}

TEST_CASE("render, echo and parse recover the planted claim") {
  const auto& examples = claimnorm::prompts::default_example_set();
  auto echo = MockBackend::echo();
  for (std::size_t k = 1; k <= examples.size(); ++k) {
    const std::span<const claimnorm::prompts::InContextExample> chosen(examples.data(), k);
    for (const PromptKind kind : {PromptKind::Cacn, PromptKind::Direct, PromptKind::QGuided}) {
      const auto prompt = claimnorm::prompts::render(kind, "Some unrelated post text.", chosen, {});
      const auto completion = echo->call(prompt.text, {});
      CHECK(claimnorm::prompts::parse_response(kind, completion.text).final_claim == chosen.back().normalized_claim);
    }
  }
}

TEST_CASE("client retries transient failures with backoff") {
  auto mock = MockBackend::constant("ok");
  std::atomic<int> failures_left{2};
  mock->fail_when([&](const std::string&) { return failures_left-- > 0; });
  Client client(mock, fast_retries());
  const auto c = client.complete(std::string("p"), GenerationConfig{});
  CHECK(c.text == "ok");
  CHECK(client.backend_calls() == 3);
  CHECK_FALSE(c.cache_hit);
  CHECK(c.prompt_sha == claimnorm::sha256_hex("p"));

  mock->fail_when([](const std::string&) { return true; });
  GenerationConfig config;
  config.max_retries = 2;
  try {
    client.complete(std::string("q"), config);
    FAIL("expected exhaustion");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::Exhausted);
    CHECK(e.prompt_sha() == claimnorm::sha256_hex("q"));
  }
  CHECK(client.backend_calls() == 6);

  auto auth = std::make_shared<ThrowingBackend>(BackendError::Kind::Auth);
  Client auth_client(auth, fast_retries());
  try {
    auth_client.complete(std::string("r"), GenerationConfig{});
    FAIL("expected an auth error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::Auth);
    CHECK_FALSE(e.retryable());
    CHECK(e.prompt_sha() == claimnorm::sha256_hex("r"));
  }
  CHECK(auth->calls == 1);
}

TEST_CASE("cache keys cover the whole request") {
  const GenerationConfig base;
  auto changed = base;
  changed.temperature = 0.7;
  CHECK(cache_key("p", base) == cache_key("p", base));
  CHECK(cache_key("p", base) != cache_key("p", changed));
  changed = base;
  changed.seed = 1;
  CHECK(cache_key("p", base) != cache_key("p", changed));
  changed = base;
  changed.max_tokens = 60;
  CHECK(cache_key("p", base) != cache_key("p", changed));
  changed = base;
  changed.max_retries = 9;
  CHECK(cache_key("p", base) == cache_key("p", changed));
  CHECK(cache_key("p", base) != cache_key("q", base));
}

TEST_CASE("cached_complete skips the backend on hits") {
  auto mock = MockBackend::echo();
  Client client(mock, fast_retries());
  CompletionCache cache;
  claimnorm::prompts::RenderedPrompt prompt;
  prompt.text = "Post: x\nNormalized claim: Planted.\n";
  GenerationConfig config;

  const auto first = cached_complete(prompt, config, cache, client);
  CHECK_FALSE(first.cache_hit);
  const auto second = cached_complete(prompt, config, cache, client);
  CHECK(second.cache_hit);
  CHECK(second.text == first.text);
  CHECK(mock->calls() == 1);

  config.temperature = 0.9;
  CHECK_FALSE(cached_complete(prompt, config, cache, client).cache_hit);
  CHECK(mock->calls() == 2);
}

TEST_CASE("100 mixed calls over 40 unique prompts reach the backend 40 times") {
  auto mock = MockBackend::echo();
  Client client(mock, fast_retries());
  CompletionCache cache;
  std::vector<claimnorm::prompts::RenderedPrompt> prompts(100);
  for (int i = 0; i < 100; ++i) prompts[i].text = "Normalized claim: claim " + std::to_string(i % 40) + "\n";

  std::vector<std::thread> workers;
  std::atomic<int> next{0};
  std::atomic<int> hits{0};
  for (int t = 0; t < 8; ++t) {
    workers.emplace_back([&] {
      for (int i = next++; i < 100; i = next++) {
        if (cached_complete(prompts[i], {}, cache, client).cache_hit) ++hits;
      }
    });
  }
  for (auto& w : workers) w.join();
  CHECK(mock->calls() == 40);
  CHECK(client.backend_calls() == 40);
  CHECK(hits == 60);
  CHECK(cache.size() == 40);
}

TEST_CASE("persistent cache survives reload and skips corrupt lines") {
  const auto path = temp_file("cache_test.jsonl");
  GenerationConfig config;
  {
    CompletionCache cache(path);
    cache.put(cache_key("a", config), claimnorm::sha256_hex("a"), "Normalized claim: A.", config);
    cache.put(cache_key("b", config), claimnorm::sha256_hex("b"), "Normalized claim: B.", config);
  }
  std::ofstream(path, std::ios::app) << "{\"key\": \"truncated\n";
  {
    CompletionCache cache(path);
    CHECK(cache.corrupt_lines() == 1);
    CHECK(cache.size() == 2);
    CHECK(cache.get(cache_key("a", config)) == "Normalized claim: A.");
    cache.put(cache_key("c", config), claimnorm::sha256_hex("c"), "C", config);
  }
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  const auto j = nlohmann::json::parse(line);
  CHECK(j.at("key") == cache_key("a", config));
  CHECK(j.at("prompt_sha") == claimnorm::sha256_hex("a"));
  CHECK(j.at("config").at("max_tokens") == 120);
  CHECK(j.contains("timestamp"));
  CHECK(CompletionCache(path).size() == 3);
  std::filesystem::remove(path);
}

TEST_CASE("http backend against a local stub") {
  StubServer stub;
  GenerationConfig config;
  config.seed = 3;
  HttpBackend http({.base_url = stub.url(), .api_key = "secret"});
  const auto c = http.call("Post: honey\nNormalized claim:\n", config);
  CHECK(c.text == "Normalized claim: Stub reply.");
  CHECK(c.backend == BackendKind::Http);
  REQUIRE(c.token_usage.has_value());
  CHECK(c.token_usage->completion_tokens == 5);
  {
    std::lock_guard lock(stub.mutex);
    const auto body = nlohmann::json::parse(stub.last_body);
    CHECK(body.at("model") == "gpt-3.5-turbo-instruct");
    CHECK(body.at("prompt") == "Post: honey\nNormalized claim:\n");
    CHECK(body.at("max_tokens") == 120);
    CHECK(body.at("temperature") == 0.6);
    CHECK(body.at("seed") == 3);
    CHECK(stub.last_auth == "Bearer secret");
  }

  HttpBackend chat({.base_url = stub.url(), .style = ApiStyle::Chat});
  CHECK(chat.call("hi", config).text == "Normalized claim: Chat reply.");

  stub.status = 401;
  Client client(std::make_shared<HttpBackend>(HttpOptions{.base_url = stub.url()}), fast_retries());
  const int before = stub.requests;
  try {
    client.complete(std::string("x"), config);
    FAIL("expected auth failure");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::Auth);
  }
  CHECK(stub.requests == before + 1);

  stub.status = 429;
  config.max_retries = 2;
  CHECK_THROWS_AS(client.complete(std::string("x"), config), BackendError);
  CHECK(stub.requests == before + 4);

  HttpBackend nowhere({.base_url = "http://127.0.0.1:1"});
  try {
    nowhere.call("x", config);
    FAIL("expected a network error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::Transient);
  }
  CHECK_THROWS_AS(parse_response_body("{\"choices\": []}", ApiStyle::Completions), BackendError);
}

TEST_CASE("concurrency bound holds at the server") {
  StubServer stub;
  stub.delay_ms = 40;
  Client client(std::make_shared<HttpBackend>(HttpOptions{.base_url = stub.url()}),
                ClientOptions{.max_concurrency = 3});
  std::vector<std::thread> threads;
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&, i] { client.complete("prompt " + std::to_string(i), GenerationConfig{}); });
  }
  for (auto& t : threads) t.join();
  CHECK(stub.requests == 12);
  CHECK(stub.peak <= 3);
  CHECK(stub.peak >= 2);
}

TEST_CASE("rate limiter spaces requests") {
  RateLimiter limiter(1200);  // 20 per second, burst of 20
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 30; ++i) limiter.acquire();
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(elapsed >= 0.4);
  CHECK(elapsed < 2.0);

  RateLimiter unlimited(0);
  for (int i = 0; i < 1000; ++i) unlimited.acquire();
}
