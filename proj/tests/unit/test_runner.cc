#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "claimnorm/io.h"
#include "claimnorm/runner.h"
#include "doctest.h"

using namespace claimnorm;
using namespace claimnorm::runner;
using nlohmann::json;

namespace {

std::filesystem::path source_path(const std::string& rel) { return std::filesystem::path(CLAIMNORM_SOURCE_DIR) / rel; }

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("claimnorm_runner_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

json oracle() {
  std::ifstream in(source_path("tests/fixtures/runner_oracle.json"));
  return json::parse(in);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig fixture_config(const std::filesystem::path& dir) {
  ExperimentConfig c;
  c.name = "cacn";
  c.dataset = source_path("tests/fixtures/runner_dataset.jsonl");
  c.example_set = source_path("tests/fixtures/runner_examples.jsonl");
  c.k = 1;
  c.output_dir = dir;
  c.cache_path = dir / "cache.jsonl";
  c.generation.max_retries = 0;
  c.backend.client.backoff_initial_seconds = 0;
  return c;
}

RunResult fake_run(std::string name, prompts::PromptKind kind, std::span<const metrics::Metric> metric_list,
                   double base) {
  RunResult r;
  r.name = std::move(name);
  r.kind = kind;
  r.config = {{"metrics", json::array()}};
  for (const auto m : metric_list) r.config["metrics"].push_back(metrics::metric_name(m));
  // Real reports carry their columns sorted by name.
  r.report.columns = metrics::metric_columns(metric_list);
  double v = base;
  for (const auto& column : r.report.columns) {
    r.report.means[column] = v;
    v += 0.01;
  }
  std::sort(r.report.columns.begin(), r.report.columns.end());
  r.report.count = 20;
  return r;
}

}  // namespace

TEST_CASE("echo backend reproduces the gold claims end to end") {
  const auto dir = fresh_dir("echo");
  auto config = fixture_config(dir);
  const auto started = std::chrono::steady_clock::now();

  llm::Client client(llm::MockBackend::echo(), config.backend.client);
  llm::CompletionCache cache(config.cache_path);
  const auto first = run_experiment(config, client, cache);

  REQUIRE(first.examples.size() == 20);
  for (const auto& ex : first.examples) {
    CAPTURE(ex.id);
    CHECK_FALSE(ex.error);
    CHECK(ex.scores.at("rouge1.f1") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ex.scores.at("rouge2.f1") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ex.scores.at("rougeL.f1") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ex.scores.at("bleu4") == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(std::is_sorted(first.examples.begin(), first.examples.end(),
                       [](const auto& a, const auto& b) { return a.id < b.id; }));
  CHECK(first.stats.backend_calls == 20);
  CHECK(first.stats.cache_hits == 0);
  CHECK(first.report.count == 20);

  const std::vector<RunResult> runs{first};
  const auto table = emit_report(runs, ReportFormat::Markdown);
  CHECK(table.find("| cacn | 100.00 | 100.00 | 100.00 |") != std::string::npos);
  CHECK(table.find("| 100.00 | 99.92 |\n") != std::string::npos);

  // Fresh backend, cache reloaded from disk.
  auto backend = llm::MockBackend::echo();
  llm::Client warm_client(backend, config.backend.client);
  llm::CompletionCache warm_cache(config.cache_path);
  const auto second = run_experiment(config, warm_client, warm_cache);
  CHECK(backend->calls() == 0);
  CHECK(second.stats.backend_calls == 0);
  CHECK(second.stats.cache_hits == 20);
  CHECK(second.deterministic_json().dump() == first.deterministic_json().dump());

  const auto saved = RunResult::from_json(nlohmann::ordered_json::parse(slurp(dir / "run_result.json")));
  CHECK(saved.deterministic_json().dump() == first.deterministic_json().dump());
  CHECK(io::read_predictions(dir / "predictions.jsonl").size() == 20);

  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() < 10.0);
}

TEST_CASE("most similar example sits next to the target post") {
  const auto dir = fresh_dir("echo_k4");
  auto config = fixture_config(dir);
  config.k = 4;
  llm::Client client(llm::MockBackend::echo(), config.backend.client);
  llm::CompletionCache cache;
  const auto run = run_experiment(config, client, cache);
  for (const auto& ex : run.examples) CHECK(ex.scores.at("rouge1.f1") == doctest::Approx(1.0));
}

TEST_CASE("constant backend scores match the brute-force oracle") {
  const auto dir = fresh_dir("constant");
  auto config = fixture_config(dir);
  llm::Client client(llm::MockBackend::constant("the"), config.backend.client);
  llm::CompletionCache cache;
  const auto run = run_experiment(config, client, cache);

  const auto expected = oracle().at("constant_the");
  const auto& rows = expected.at("per_example");
  REQUIRE(rows.size() == run.examples.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(run.examples[i].prediction == "the");
    for (const auto& [column, value] : rows[i].items()) {
      CAPTURE(column);
      CHECK(run.examples[i].scores.at(column) == doctest::Approx(value.get<double>()).epsilon(1e-9));
    }
  }
  for (const auto& [column, value] : expected.at("means").items()) {
    CAPTURE(column);
    CHECK(run.report.means.at(column) == doctest::Approx(value.get<double>()).epsilon(1e-9));
  }
}

TEST_CASE("run aborts above the failure threshold and resumes from the cache") {
  const auto records = corpus::read_jsonl(source_path("tests/fixtures/runner_dataset.jsonl"));
  std::vector<std::string> doomed;
  for (const auto& r : records) {
    if (r.split == corpus::Split::Test && doomed.size() < 3) doomed.push_back(r.post);
  }
  auto fails_for = [](std::vector<std::string> posts) {
    return [posts = std::move(posts)](const std::string& prompt) {
      return std::any_of(posts.begin(), posts.end(),
                         [&](const std::string& p) { return prompt.find(p) != std::string::npos; });
    };
  };

  SUBCASE("three of twenty failing aborts") {
    const auto dir = fresh_dir("abort");
    auto config = fixture_config(dir);
    auto flaky = llm::MockBackend::echo();
    flaky->fail_when(fails_for(doomed));
    llm::Client client(flaky, config.backend.client);
    llm::CompletionCache cache(config.cache_path);
    try {
      run_experiment(config, client, cache);
      FAIL("expected RunAborted");
    } catch (const RunAborted& e) {
      CHECK(e.manifest() == dir / "manifest.json");
      const auto manifest = json::parse(slurp(e.manifest()));
      CHECK(manifest.at("failed").size() == 3);
      CHECK(manifest.at("completed").size() == 17);
      CHECK(manifest.at("config").at("k") == 1);
    }

    auto healthy = llm::MockBackend::echo();
    llm::Client resumed(healthy, config.backend.client);
    llm::CompletionCache reloaded(config.cache_path);
    const auto run = run_experiment(config, resumed, reloaded);
    CHECK(healthy->calls() == 3);
    CHECK(run.stats.cache_hits == 17);
    CHECK(run.report.count == 20);
  }

  SUBCASE("two of twenty failing is recorded and excluded") {
    const auto dir = fresh_dir("partial");
    auto config = fixture_config(dir);
    auto flaky = llm::MockBackend::echo();
    flaky->fail_when(fails_for({doomed[0], doomed[1]}));
    llm::Client client(flaky, config.backend.client);
    llm::CompletionCache cache;
    const auto run = run_experiment(config, client, cache);
    CHECK(run.examples.size() == 20);
    CHECK(run.stats.failures == 2);
    CHECK(run.report.count == 18);
    CHECK(run.report.means.at("rouge1.f1") == doctest::Approx(1.0));
    std::size_t with_error = 0;
    for (const auto& ex : run.examples) {
      if (ex.error) {
        ++with_error;
        CHECK(ex.scores.empty());
      }
    }
    CHECK(with_error == 2);
    CHECK(io::read_predictions(dir / "predictions.jsonl").size() == 18);
  }
}

TEST_CASE("experiment config json") {
  ExperimentConfig c;
  c.name = "qguided-k2";
  c.dataset = "data/clan.jsonl";
  c.kind = prompts::PromptKind::QGuided;
  c.k = 2;
  c.control.keywords = {"vaccine", "microchip"};
  c.generation.seed = 11;
  c.metrics = {metrics::Metric::Rouge1, metrics::Metric::Abstractness};
  c.backend.type = "http";
  c.backend.base_url = "http://127.0.0.1:9";
  c.backend.style = llm::ApiStyle::Chat;

  const auto j = c.to_json();
  const auto back = ExperimentConfig::from_json(json::parse(j.dump()));
  CHECK(back.to_json() == j);
  CHECK(back.kind == prompts::PromptKind::QGuided);
  CHECK(back.backend.style == llm::ApiStyle::Chat);

  CHECK(ExperimentConfig::from_json(json::object()).k == 4);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"kk", 3}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"k", -1}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"metrics", json::array()}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"generation", {{"temperature", -1}}}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"backend", {{"colour", "red"}}}}), std::invalid_argument);
}

TEST_CASE("report columns and delta row") {
  const std::vector<metrics::Metric> defaults = ExperimentConfig{}.metrics;
  CHECK(report_columns(defaults) == std::vector<std::string>{"ROUGE-1 P", "ROUGE-1 R", "ROUGE-1 F1", "ROUGE-2 P",
                                                             "ROUGE-2 R", "ROUGE-2 F1", "ROUGE-L P", "ROUGE-L R",
                                                             "ROUGE-L F1", "BLEU-4", "METEOR"});

  const std::vector<metrics::Metric> r1 = {metrics::Metric::Rouge1};
  std::vector<RunResult> runs{fake_run("direct", prompts::PromptKind::Direct, r1, 0.30),
                              fake_run("cacn", prompts::PromptKind::Cacn, r1, 0.30)};
  runs[1].report.means["rouge1.f1"] = 0.40;
  runs[0].report.means["rouge1.f1"] = 0.30;
  const auto md = emit_report(runs, ReportFormat::Markdown);
  CHECK(md.find("| delta (cacn vs best other) | +0.00% | +0.00% | +33.33% |") != std::string::npos);

  const auto csv = emit_report(runs, ReportFormat::Csv);
  CHECK(csv.rfind("system,ROUGE-1 P,ROUGE-1 R,ROUGE-1 F1\n", 0) == 0);
  CHECK(csv.find("cacn,30.00,31.00,40.00\n") != std::string::npos);

  const auto js = json::parse(emit_report(runs, ReportFormat::Json));
  CHECK(js.at("delta_percent").at("values").at("ROUGE-1 F1").get<double>() == doctest::Approx(100.0 / 3));
  CHECK(js.at("runs").at(1).at("scores").at("ROUGE-1 F1").get<double>() == doctest::Approx(40.0));

  // Zero baseline has no meaningful ratio.
  runs[0].report.means["rouge1.p"] = 0.0;
  runs[1].report.means["rouge1.p"] = 0.0;
  CHECK(emit_report(runs, ReportFormat::Markdown).find("| n/a |") != std::string::npos);

  const std::vector<RunResult> single{runs[1]};
  CHECK(emit_report(single, ReportFormat::Markdown).find("delta") == std::string::npos);

  std::vector<RunResult> mismatched{runs[0], fake_run("x", prompts::PromptKind::Direct, defaults, 0.1)};
  CHECK_THROWS_AS(emit_report(mismatched, ReportFormat::Csv), std::invalid_argument);
  CHECK_THROWS_AS(emit_report({}, ReportFormat::Csv), std::invalid_argument);
}

TEST_CASE("two-run report matches its golden file") {
  const std::vector<metrics::Metric> defaults = ExperimentConfig{}.metrics;
  const std::vector<RunResult> runs{fake_run("direct", prompts::PromptKind::Direct, defaults, 0.20),
                                    fake_run("cacn", prompts::PromptKind::Cacn, defaults, 0.25)};
  const auto text = emit_report(runs, ReportFormat::Markdown);
  const auto path = source_path("tests/golden/report_two_runs.md");
  if (std::getenv("CLAIMNORM_UPDATE_GOLDENS")) std::ofstream(path, std::ios::binary) << text;
  CHECK(text == slurp(path));
}

TEST_CASE("histogram binning") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> values(1000);
  for (auto& v : values) v = u(rng);
  values.push_back(1.0);
  values.push_back(0.0);
  const auto h = histogram(values, 20);
  CHECK(h.edges.size() == 21);
  CHECK(h.edges.back() == 1.0);
  std::size_t total = 0;
  for (const auto c : h.counts) total += c;
  CHECK(total == values.size());
  CHECK_THROWS(histogram(values, 0));

  std::vector<corpus::ClaimRecord> same(4);
  for (auto& r : same) {
    r.post = "the vaccine contains a tracking chip";
    r.references = {"the vaccine contains a tracking chip"};
  }
  const auto d = emit_distributions(same);
  CHECK(d.cosine.counts.back() == 4);

  auto records = corpus::read_jsonl(source_path("tests/fixtures/runner_dataset.jsonl"));
  records.resize(10);
  const auto expected = oracle().at("histogram_first10").at("counts").get<std::vector<std::size_t>>();
  const auto ten = emit_distributions(records);
  CHECK(ten.cosine.counts == expected);

  std::vector<std::string> claims;
  for (const auto& r : records) claims.insert(claims.end(), r.references.begin(), r.references.end());
  CHECK(ten.claim_lengths.median == textproc::token_length_stats(claims).median);
  CHECK(ten.to_json().at("cosine_histogram").at("counts").size() == 20);
  CHECK_THROWS(emit_distributions(std::span<const corpus::ClaimRecord>{}));
}

TEST_CASE("retrieval table") {
  const auto judgments = io::read_judgments(source_path("tests/fixtures/judgments_35.jsonl"));
  REQUIRE(judgments.size() == 70);
  const auto table = run_retrieval_eval(judgments);
  const auto expected = oracle().at("judgments_35");
  for (const auto kind : {metrics::InputKind::NormalizedClaim, metrics::InputKind::Post}) {
    const auto want = expected.at(std::string(metrics::input_kind_name(kind))).get<std::vector<double>>();
    for (std::size_t i = 0; i < 3; ++i) CHECK(table.rows.at(kind)[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
  CHECK(table.to_markdown().rfind("| Input | P@1 | P@3 | P@5 |", 0) == 0);

  // Claims relevant at every rank, posts only at rank 1.
  std::vector<metrics::RelevanceJudgment> dominant;
  for (int i = 0; i < 4; ++i) {
    dominant.push_back({"i" + std::to_string(i), metrics::InputKind::NormalizedClaim,
                        std::vector<std::array<int, 3>>(5, {1, 1, 0})});
    dominant.push_back({"i" + std::to_string(i), metrics::InputKind::Post,
                        {{1, 1, 1}, {0, 0, 1}, {0, 1, 0}, {0, 0, 0}, {1, 0, 0}}});
  }
  const auto dom = run_retrieval_eval(dominant);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(dom.rows.at(metrics::InputKind::NormalizedClaim)[i] >= dom.rows.at(metrics::InputKind::Post)[i]);
  }
  CHECK(dom.rows.at(metrics::InputKind::Post)[1] == doctest::Approx(1.0 / 3));

  std::vector<metrics::RelevanceJudgment> posts_only(dominant.begin() + 1, dominant.begin() + 2);
  CHECK_THROWS_AS(run_retrieval_eval(posts_only), std::invalid_argument);
}

TEST_CASE("jsonl readers report line numbers") {
  std::istringstream preds("{\"id\": \"a\", \"prediction\": \"x\"}\n\n{\"id\": \"a\", \"prediction\": \"y\"}\n");
  try {
    io::read_predictions(preds);
    FAIL("duplicate id accepted");
  } catch (const corpus::JsonlError& e) {
    CHECK(e.line() == 3);
  }

  std::istringstream ratings(
      "{\"instance_id\": \"r1\", \"ratings\": {\"fluency\": [5, 4, 5, 4, 5], \"coherence\": [4, 4, 4, 4, 4]}}\n");
  const auto rated = io::read_ratings(ratings);
  REQUIRE(rated.size() == 1);
  CHECK(rated[0].ratings.at(metrics::Aspect::Fluency).size() == 5);

  std::istringstream bad("{\"instance_id\": \"q\", \"input_kind\": \"tweet\", \"votes\": []}\n");
  CHECK_THROWS_AS(io::read_judgments(bad), corpus::JsonlError);
}

TEST_CASE("published rows reproduce the published delta row") {
  const auto table = json::parse(slurp(source_path("tests/fixtures/published_results.json")));
  const auto columns = table.at("columns").get<std::vector<std::string>>();
  const std::vector<metrics::Metric> defaults = ExperimentConfig{}.metrics;
  std::vector<RunResult> runs;
  for (const auto& row : table.at("runs")) {
    auto run = fake_run(row.at("name").get<std::string>(), prompts::parse_kind(row.at("kind").get<std::string>()),
                        defaults, 0);
    for (std::size_t c = 0; c < columns.size(); ++c) run.report.means[columns[c]] = row.at("scores")[c].get<double>() / 100;
    runs.push_back(std::move(run));
  }
  const auto out = json::parse(emit_report(runs, ReportFormat::Json));
  CHECK(out.at("delta_percent").at("target") == "cacn");
  const auto labels = report_columns(defaults);
  for (std::size_t c = 0; c < labels.size(); ++c) {
    CAPTURE(labels[c]);
    const double got = out.at("delta_percent").at("values").at(labels[c]).get<double>();
    CHECK(std::abs(got - table.at("delta_percent")[c].get<double>()) <= 0.005 + 1e-9);
  }
}
