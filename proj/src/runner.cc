#include "claimnorm/runner.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include "claimnorm/log.h"

namespace claimnorm::runner {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string style_name(llm::ApiStyle style) { return style == llm::ApiStyle::Chat ? "chat" : "completions"; }

llm::ApiStyle parse_style(const std::string& name) {
  if (name == "chat") return llm::ApiStyle::Chat;
  if (name == "completions") return llm::ApiStyle::Completions;
  throw std::invalid_argument("unknown api style: " + name);
}

ordered_json optional_path(const std::optional<std::filesystem::path>& p) {
  return p ? ordered_json(p->string()) : ordered_json(nullptr);
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
}

BackendSpec backend_from_json(const json& j) {
  reject_unknown(j, {"type", "constant_text", "base_url", "path", "style", "max_concurrency", "requests_per_minute",
                     "backoff_initial_seconds"},
                 "backend");
  BackendSpec spec;
  spec.type = j.value("type", spec.type);
  spec.constant_text = j.value("constant_text", spec.constant_text);
  spec.base_url = j.value("base_url", spec.base_url);
  if (j.contains("path") && !j.at("path").is_null()) spec.path = j.at("path").get<std::string>();
  if (j.contains("style")) spec.style = parse_style(j.at("style").get<std::string>());
  spec.client.max_concurrency = j.value("max_concurrency", spec.client.max_concurrency);
  spec.client.requests_per_minute = j.value("requests_per_minute", spec.client.requests_per_minute);
  spec.client.backoff_initial_seconds = j.value("backoff_initial_seconds", spec.client.backoff_initial_seconds);
  return spec;
}

std::vector<std::string> fallback_keywords(std::string_view post) {
  std::vector<std::string> out;
  const auto& stopwords = textproc::WordList::builtin_stopwords();
  for (const auto& token : textproc::tokenize(post)) {
    if (stopwords.contains(token) || std::find(out.begin(), out.end(), token) != out.end()) continue;
    out.push_back(token);
    if (out.size() == 3) break;
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::vector<prompts::InContextExample> load_example_pool(const ExperimentConfig& config,
                                                         std::span<const corpus::ClaimRecord> records) {
  if (!prompts::uses_examples(config.kind) || config.k == 0) return {};
  if (config.example_set) return prompts::load_example_set(*config.example_set);
  if (config.kind == prompts::PromptKind::Cacn) return prompts::default_example_set();
  std::vector<prompts::InContextExample> pool;
  for (const auto& record : records) {
    if (record.split == corpus::Split::Train) pool.push_back(prompts::example_from_record(record));
  }
  return pool;
}

void ExperimentConfig::validate() const {
  if (metrics.empty()) throw std::invalid_argument("experiment config: metric list is empty");
  generation.validate();
  if (!(max_failure_rate >= 0 && max_failure_rate <= 1)) {
    throw std::invalid_argument("experiment config: max_failure_rate must be in [0, 1]");
  }
}

std::string ExperimentConfig::display_name() const {
  return name.empty() ? std::string(prompts::kind_name(kind)) : name;
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["name"] = name;
  j["dataset"] = dataset.string();
  j["split"] = corpus::split_name(split);
  j["kind"] = prompts::kind_name(kind);
  j["k"] = k;
  j["example_set"] = optional_path(example_set);
  j["templates_dir"] = optional_path(templates_dir);
  j["control"] = {{"token_limit", control.token_limit ? ordered_json(*control.token_limit) : ordered_json(nullptr)},
                  {"abstractness", control.abstractness ? ordered_json(*control.abstractness) : ordered_json(nullptr)},
                  {"keywords", control.keywords}};
  j["generation"] = generation.to_json();
  ordered_json metric_names = ordered_json::array();
  for (const auto m : metrics) metric_names.push_back(metrics::metric_name(m));
  j["metrics"] = metric_names;
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  j["cache_path"] = cache_path.string();
  j["backend"] = {{"type", backend.type},
                  {"constant_text", backend.constant_text},
                  {"base_url", backend.base_url},
                  {"path", backend.path ? ordered_json(*backend.path) : ordered_json(nullptr)},
                  {"style", style_name(backend.style)},
                  {"max_concurrency", backend.client.max_concurrency},
                  {"requests_per_minute", backend.client.requests_per_minute},
                  {"backoff_initial_seconds", backend.client.backoff_initial_seconds}};
  j["max_failure_rate"] = max_failure_rate;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
  reject_unknown(j,
                 {"name", "dataset", "split", "kind", "k", "example_set", "templates_dir", "control", "generation",
                  "metrics", "seed", "output_dir", "cache_path", "backend", "max_failure_rate"},
                 "experiment config");
  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
    if (j.contains("split")) c.split = corpus::parse_split(j.at("split").get<std::string>());
    if (j.contains("kind")) c.kind = prompts::parse_kind(j.at("kind").get<std::string>());
    if (j.contains("k")) {
      const auto k = j.at("k").get<long long>();
      if (k < 0) throw std::invalid_argument("experiment config: k must be >= 0");
      c.k = static_cast<std::size_t>(k);
    }
    if (j.contains("example_set") && !j.at("example_set").is_null()) c.example_set = j.at("example_set").get<std::string>();
    if (j.contains("templates_dir") && !j.at("templates_dir").is_null()) {
      c.templates_dir = j.at("templates_dir").get<std::string>();
    }
    if (j.contains("control")) {
      const auto& ctl = j.at("control");
      reject_unknown(ctl, {"token_limit", "abstractness", "keywords"}, "control");
      if (ctl.contains("token_limit")) {
        c.control.token_limit = ctl.at("token_limit").is_null() ? std::nullopt : std::optional<int>(ctl.at("token_limit").get<int>());
      }
      if (ctl.contains("abstractness")) {
        c.control.abstractness = ctl.at("abstractness").is_null() ? std::nullopt
                                                                  : std::optional<double>(ctl.at("abstractness").get<double>());
      }
      if (ctl.contains("keywords")) c.control.keywords = ctl.at("keywords").get<std::vector<std::string>>();
    }
    if (j.contains("generation")) c.generation = llm::GenerationConfig::from_json(j.at("generation"));
    if (j.contains("metrics")) {
      c.metrics.clear();
      for (const auto& name : j.at("metrics")) c.metrics.push_back(metrics::parse_metric(name.get<std::string>()));
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("cache_path")) c.cache_path = j.at("cache_path").get<std::string>();
    if (j.contains("backend")) c.backend = backend_from_json(j.at("backend"));
    c.max_failure_rate = j.value("max_failure_rate", c.max_failure_rate);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ordered_json RunResult::deterministic_json() const {
  ordered_json j;
  j["name"] = name;
  j["kind"] = prompts::kind_name(kind);
  j["config"] = config;
  ordered_json rows = ordered_json::array();
  for (const auto& ex : examples) {
    ordered_json row;
    row["id"] = ex.id;
    row["prompt_sha"] = ex.prompt_sha;
    row["prediction"] = ex.prediction;
    ordered_json scores = ordered_json::object();
    for (const auto& [column, value] : ex.scores) scores[column] = value;
    row["scores"] = scores;
    if (ex.error) row["error"] = *ex.error;
    rows.push_back(std::move(row));
  }
  j["examples"] = std::move(rows);
  ordered_json means = ordered_json::object();
  for (const auto& column : report.columns) means[column] = report.means.at(column);
  j["corpus"] = {{"count", report.count}, {"columns", report.columns}, {"means", means}};
  return j;
}

ordered_json RunResult::to_json() const {
  auto j = deterministic_json();
  j["stats"] = {{"wall_clock_seconds", stats.wall_clock_seconds},
                {"backend_calls", stats.backend_calls},
                {"cache_hits", stats.cache_hits},
                {"failures", stats.failures}};
  return j;
}

RunResult RunResult::from_json(const ordered_json& j) {
  RunResult r;
  try {
    r.name = j.at("name").get<std::string>();
    r.kind = prompts::parse_kind(j.at("kind").get<std::string>());
    r.config = j.at("config");
    for (const auto& row : j.at("examples")) {
      ExampleResult ex;
      ex.id = row.at("id").get<std::string>();
      ex.prompt_sha = row.at("prompt_sha").get<std::string>();
      ex.prediction = row.at("prediction").get<std::string>();
      ex.scores = row.at("scores").get<metrics::ScoreRow>();
      if (row.contains("error")) ex.error = row.at("error").get<std::string>();
      r.examples.push_back(std::move(ex));
    }
    const auto& corpus_block = j.at("corpus");
    r.report.count = corpus_block.at("count").get<std::size_t>();
    r.report.columns = corpus_block.at("columns").get<std::vector<std::string>>();
    r.report.means = corpus_block.at("means").get<std::map<std::string, double>>();
    if (j.contains("stats")) {
      const auto& s = j.at("stats");
      r.stats.wall_clock_seconds = s.value("wall_clock_seconds", 0.0);
      r.stats.backend_calls = s.value("backend_calls", std::size_t{0});
      r.stats.cache_hits = s.value("cache_hits", std::size_t{0});
      r.stats.failures = s.value("failures", std::size_t{0});
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("run result: ") + e.what());
  }
  return r;
}

std::shared_ptr<llm::Backend> make_backend(const BackendSpec& spec, const std::string& api_key) {
  if (spec.type == "mock-echo") return llm::MockBackend::echo();
  if (spec.type == "mock-constant") return llm::MockBackend::constant(spec.constant_text);
  if (spec.type == "http") {
    if (spec.base_url.empty()) throw std::invalid_argument("http backend needs backend.base_url");
    return std::make_shared<llm::HttpBackend>(
        llm::HttpOptions{.base_url = spec.base_url, .path = spec.path, .style = spec.style, .api_key = api_key});
  }
  throw std::invalid_argument("unknown backend type: " + spec.type);
}

prompts::RenderedPrompt render_for_record(const ExperimentConfig& config, const corpus::ClaimRecord& record,
                                          std::span<const prompts::InContextExample> pool,
                                          const prompts::TemplateSet& templates) {
  using prompts::PromptKind;
  if (prompts::uses_examples(config.kind)) {
    auto examples = prompts::select_examples(pool, record.post, config.k, record.id);
    // Most similar example goes last, right before the target post.
    std::reverse(examples.begin(), examples.end());
    return prompts::render(config.kind, record.post, examples, config.control, templates);
  }
  if (config.kind == PromptKind::ZsCot) return prompts::render_baseline(PromptKind::ZsCot, record.post, {}, templates);
  auto control = config.control;
  if (config.kind == PromptKind::EntityCentric && control.keywords.empty()) {
    control.keywords = textproc::extract_svo_keywords(record.post).keywords;
    if (control.keywords.empty()) control.keywords = fallback_keywords(record.post);
  }
  return prompts::render_controlled(config.kind, record.post, control, templates);
}

std::vector<metrics::ScoreRow> score_predictions(std::span<const corpus::ClaimRecord> records,
                                                 std::span<const std::string> predictions,
                                                 std::span<const metrics::Metric> metric_list) {
  if (records.size() != predictions.size()) {
    throw std::invalid_argument("score_predictions: records and predictions differ in length");
  }
  auto tok = [](std::string_view text) { return textproc::tokenize(textproc::clean_text(text)); };
  std::vector<metrics::ScoringInput> inputs(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    inputs[i].hypothesis = tok(predictions[i]);
    for (const auto& ref : records[i].references) inputs[i].references.push_back(tok(ref));
    inputs[i].post = tok(records[i].post);
  }
  return metrics::score_batch(inputs, metric_list);
}

RunResult run_experiment(const ExperimentConfig& config, llm::Client& client, llm::CompletionCache& cache) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::size_t calls_before = client.backend_calls();

  const auto all_records = corpus::read_jsonl(config.dataset);
  std::vector<corpus::ClaimRecord> records;
  for (const auto& r : all_records) {
    if (r.split == config.split) records.push_back(r);
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (records.empty()) {
    throw std::invalid_argument("no records in split '" + std::string(corpus::split_name(config.split)) + "' of " +
                                config.dataset.string());
  }

  const auto templates = config.templates_dir ? prompts::TemplateSet::load(*config.templates_dir)
                                              : prompts::TemplateSet::builtin();
  const auto pool = load_example_pool(config, all_records);
  auto generation = config.generation;
  if (!generation.seed) generation.seed = static_cast<std::int64_t>(config.seed);

  std::vector<prompts::RenderedPrompt> rendered;
  rendered.reserve(records.size());
  for (const auto& record : records) rendered.push_back(render_for_record(config, record, pool, templates));

  const std::size_t n = records.size();
  std::vector<ExampleResult> results(n);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> hits{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      auto& result = results[i];
      result.id = records[i].id;
      result.prompt_sha = rendered[i].sha();
      try {
        const auto completion = llm::cached_complete(rendered[i], generation, cache, client);
        if (completion.cache_hit) ++hits;
        result.prediction = prompts::parse_response(config.kind, completion.text).final_claim;
      } catch (const std::exception& e) {
        result.error = e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(config.backend.client.max_concurrency, 1, n);
  std::vector<std::thread> pool_threads;
  for (std::size_t t = 1; t < threads; ++t) pool_threads.emplace_back(worker);
  worker();
  for (auto& t : pool_threads) t.join();

  RunResult run;
  run.name = config.display_name();
  run.kind = config.kind;
  run.config = config.to_json();
  run.stats.failures = static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const ExampleResult& r) { return r.error.has_value(); }));
  run.stats.cache_hits = hits;
  run.stats.backend_calls = client.backend_calls() - calls_before;

  std::filesystem::create_directories(config.output_dir);
  if (static_cast<double>(run.stats.failures) > config.max_failure_rate * static_cast<double>(n)) {
    ordered_json manifest;
    manifest["config"] = run.config;
    manifest["cache_path"] = cache.path().string();
    manifest["completed"] = ordered_json::array();
    manifest["failed"] = ordered_json::array();
    for (const auto& r : results) {
      if (r.error) {
        manifest["failed"].push_back({{"id", r.id}, {"prompt_sha", r.prompt_sha}, {"error", *r.error}});
      } else {
        manifest["completed"].push_back(r.id);
      }
    }
    const auto path = config.output_dir / "manifest.json";
    write_text(path, manifest.dump(2) + "\n");
    throw RunAborted(std::to_string(run.stats.failures) + " of " + std::to_string(n) +
                         " examples failed; resumable manifest written to " + path.string(),
                     path);
  }
  if (run.stats.failures > 0) log().warn("{} of {} examples failed and are excluded from the corpus scores", run.stats.failures, n);

  std::vector<corpus::ClaimRecord> ok_records;
  std::vector<std::string> ok_predictions;
  std::vector<std::size_t> ok_index;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i].error) continue;
    ok_records.push_back(records[i]);
    ok_predictions.push_back(results[i].prediction);
    ok_index.push_back(i);
  }
  const auto rows = score_predictions(ok_records, ok_predictions, config.metrics);
  for (std::size_t j = 0; j < rows.size(); ++j) results[ok_index[j]].scores = rows[j];
  if (!rows.empty()) {
    run.report = metrics::corpus_average(rows);
  } else {
    run.report.columns = metrics::metric_columns(config.metrics);
    for (const auto& column : run.report.columns) run.report.means[column] = 0.0;
  }
  run.examples = std::move(results);
  run.stats.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  write_text(config.output_dir / "run_result.json", run.to_json().dump(2) + "\n");
  std::string predictions;
  for (const auto& ex : run.examples) {
    if (ex.error) continue;
    predictions += ordered_json{{"id", ex.id}, {"prediction", ex.prediction}}.dump(-1, ' ', false,
                                                                                  json::error_handler_t::replace);
    predictions += "\n";
  }
  write_text(config.output_dir / "predictions.jsonl", predictions);
  return run;
}

}  // namespace claimnorm::runner
