#include "claimnorm/cli.h"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "claimnorm/io.h"
#include "claimnorm/log.h"
#include "claimnorm/runner.h"

namespace claimnorm::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Thrown for bad input; maps to kUsageError.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ValueType { String, Int, Unsigned, Real };

// One `run` setting that can come from the config file, the environment or a
// flag, in increasing order of precedence.
struct Setting {
  const char* flag;
  const char* env;
  json::json_pointer pointer;
  ValueType type;
  const char* help;
};

const std::vector<Setting>& run_settings() {
  static const std::vector<Setting> settings = {
      {"--name", "CLAIMNORM_NAME", json::json_pointer("/name"), ValueType::String, "Row label in reports"},
      {"--dataset", "CLAIMNORM_DATASET", json::json_pointer("/dataset"), ValueType::String, "Dataset JSONL"},
      {"--split", "CLAIMNORM_SPLIT", json::json_pointer("/split"), ValueType::String, "train, val or test"},
      {"--kind", "CLAIMNORM_KIND", json::json_pointer("/kind"), ValueType::String, "Prompt kind"},
      {"--k", "CLAIMNORM_K", json::json_pointer("/k"), ValueType::Int, "In-context examples per prompt"},
      {"--example-set", "CLAIMNORM_EXAMPLE_SET", json::json_pointer("/example_set"), ValueType::String,
       "In-context example JSONL"},
      {"--templates", "CLAIMNORM_TEMPLATES", json::json_pointer("/templates_dir"), ValueType::String,
       "Directory overriding built-in templates"},
      {"--output-dir", "CLAIMNORM_OUTPUT_DIR", json::json_pointer("/output_dir"), ValueType::String,
       "Where run_result.json and reports go"},
      {"--cache", "CLAIMNORM_CACHE", json::json_pointer("/cache_path"), ValueType::String, "Completion cache JSONL"},
      {"--seed", "CLAIMNORM_SEED", json::json_pointer("/seed"), ValueType::Unsigned, "Run seed"},
      {"--model", "CLAIMNORM_MODEL", json::json_pointer("/generation/model_id"), ValueType::String, "Model id"},
      {"--max-tokens", "CLAIMNORM_MAX_TOKENS", json::json_pointer("/generation/max_tokens"), ValueType::Int,
       "Completion length cap"},
      {"--temperature", "CLAIMNORM_TEMPERATURE", json::json_pointer("/generation/temperature"), ValueType::Real,
       "Sampling temperature"},
      {"--backend", "CLAIMNORM_BACKEND", json::json_pointer("/backend/type"), ValueType::String,
       "mock-echo, mock-constant or http"},
      {"--base-url", "CLAIMNORM_BASE_URL", json::json_pointer("/backend/base_url"), ValueType::String,
       "Completion API base URL"},
      {"--concurrency", "CLAIMNORM_CONCURRENCY", json::json_pointer("/backend/max_concurrency"), ValueType::Int,
       "Requests in flight"},
      {"--rpm", "CLAIMNORM_RPM", json::json_pointer("/backend/requests_per_minute"), ValueType::Real,
       "Requests per minute (0 = unlimited)"},
  };
  return settings;
}

json typed_value(const Setting& s, const std::string& raw) {
  try {
    std::size_t used = 0;
    json value;
    switch (s.type) {
      case ValueType::String: return raw;
      case ValueType::Int: value = std::stoll(raw, &used); break;
      case ValueType::Unsigned:
        if (raw.starts_with('-')) throw std::invalid_argument("negative");
        value = std::stoull(raw, &used);
        break;
      case ValueType::Real: value = std::stod(raw, &used); break;
    }
    if (used != raw.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw UsageError(std::string(s.flag) + ": invalid value '" + raw + "'");
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<metrics::Metric> parse_metric_list(const std::string& text) {
  std::vector<metrics::Metric> out;
  for (const auto& name : split_list(text)) out.push_back(metrics::parse_metric(name));
  if (out.empty()) throw UsageError("empty metric list");
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string claimreview;
  std::string gfc;
  std::string out;
  std::uint64_t seed = 0;
  std::optional<std::size_t> test_size;
};

int do_ingest(const IngestArgs& a, std::ostream& out) {
  if (a.claimreview.empty() == a.gfc.empty()) throw UsageError("ingest needs exactly one of --claimreview or --gfc");
  const std::filesystem::path input = a.claimreview.empty() ? a.gfc : a.claimreview;
  const auto document = io::read_file(input);
  corpus::ParsedFeed feed;
  if (!trimmed(document).empty()) {
    feed = a.claimreview.empty() ? corpus::parse_gfc_feed(document) : corpus::parse_claimreview(document);
  }
  auto [records, filter_report] = corpus::filter_and_merge(feed.entries);
  const auto report = feed.report.then(filter_report);
  records = corpus::assign_splits(std::move(records), a.seed, {.test_size = a.test_size});
  corpus::write_jsonl(std::filesystem::path(a.out), records);

  ordered_json splits = ordered_json::object();
  for (const auto s : {corpus::Split::Train, corpus::Split::Val, corpus::Split::Test}) {
    splits[std::string(corpus::split_name(s))] =
        std::count_if(records.begin(), records.end(), [s](const auto& r) { return r.split == s; });
  }
  out << ordered_json{{"report", report.to_json()}, {"splits", splits}, {"output", a.out}}.dump(2) << '\n';
  log().info("ingested {} of {} entries into {}", report.accepted, report.input, a.out);
  return kOk;
}

int do_stats(const std::string& data, std::size_t bins, std::ostream& out) {
  const auto records = corpus::read_jsonl(std::filesystem::path(data));
  const auto stats = corpus::compute_stats(records);
  const auto dist = runner::emit_distributions(records, bins);
  out << ordered_json{{"dataset", stats.to_json()}, {"distributions", dist.to_json()}}.dump(2) << '\n';
  return kOk;
}

struct PromptArgs {
  std::string kind;
  std::string post;
  std::string id;
  std::string data;
  std::size_t k = 4;
  std::string example_set;
  std::string templates;
  std::optional<int> token_limit;
  std::optional<double> abstractness;
  std::string keywords;
  bool show_sha = false;
};

int do_prompt(const PromptArgs& a, std::ostream& out) {
  runner::ExperimentConfig config;
  config.kind = prompts::parse_kind(a.kind);
  config.k = a.k;
  if (!a.example_set.empty()) config.example_set = a.example_set;
  if (!a.templates.empty()) config.templates_dir = a.templates;
  if (a.token_limit) config.control.token_limit = a.token_limit;
  if (a.abstractness) config.control.abstractness = a.abstractness;
  config.control.keywords = split_list(a.keywords);

  std::vector<corpus::ClaimRecord> records;
  if (!a.data.empty()) records = corpus::read_jsonl(std::filesystem::path(a.data));
  corpus::ClaimRecord target;
  if (!a.id.empty()) {
    if (a.data.empty()) throw UsageError("--id needs --data");
    const auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.id == a.id; });
    if (it == records.end()) throw UsageError("no record with id " + a.id + " in " + a.data);
    target = *it;
  } else if (!a.post.empty()) {
    target.id = "cli";
    target.post = a.post;
  } else {
    throw UsageError("prompt needs --post or --id");
  }
  const auto templates = config.templates_dir ? prompts::TemplateSet::load(*config.templates_dir)
                                              : prompts::TemplateSet::builtin();
  const auto pool = runner::load_example_pool(config, records);
  const auto rendered = runner::render_for_record(config, target, pool, templates);
  out << rendered.text;
  if (!rendered.text.ends_with('\n')) out << '\n';
  if (a.show_sha) out << "sha256: " << rendered.sha() << '\n';
  return kOk;
}

int do_run(const std::string& config_path, const std::map<std::string, std::string>& flags,
           const std::string& metrics_flag, const std::string& constant_text, std::ostream& out) {
  json merged = config_path.empty() ? json::object() : read_json_file(config_path);
  if (!merged.is_object()) throw UsageError(config_path + ": config must be a JSON object");
  for (const auto& s : run_settings()) {
    if (const char* value = std::getenv(s.env); value != nullptr && *value != '\0') {
      merged[s.pointer] = typed_value(s, value);
    }
  }
  if (const char* value = std::getenv("CLAIMNORM_METRICS"); value != nullptr && *value != '\0') {
    merged["metrics"] = split_list(value);
  }
  for (const auto& s : run_settings()) {
    if (const auto it = flags.find(s.flag); it != flags.end()) merged[s.pointer] = typed_value(s, it->second);
  }
  if (!metrics_flag.empty()) merged["metrics"] = split_list(metrics_flag);
  if (!constant_text.empty()) merged["backend"]["constant_text"] = constant_text;

  const auto config = runner::ExperimentConfig::from_json(merged);
  if (config.dataset.empty()) throw UsageError("run needs a dataset (config key, CLAIMNORM_DATASET or --dataset)");

  const char* key = std::getenv("CLAIMNORM_API_KEY");
  llm::Client client(runner::make_backend(config.backend, key ? key : ""), config.backend.client);
  if (!config.cache_path.parent_path().empty()) std::filesystem::create_directories(config.cache_path.parent_path());
  llm::CompletionCache cache(config.cache_path);

  const auto result = runner::run_experiment(config, client, cache);
  const std::vector<runner::RunResult> runs{result};
  const auto markdown = runner::emit_report(runs, runner::ReportFormat::Markdown);
  std::ofstream(config.output_dir / "report.md", std::ios::binary) << markdown;
  std::ofstream(config.output_dir / "report.csv", std::ios::binary) << runner::emit_report(runs, runner::ReportFormat::Csv);
  std::ofstream(config.output_dir / "report.json", std::ios::binary)
      << runner::emit_report(runs, runner::ReportFormat::Json);
  out << markdown;
  log().info("{} examples, {} backend calls, {} cache hits, {} failures, {:.2f}s", result.examples.size(),
             result.stats.backend_calls, result.stats.cache_hits, result.stats.failures,
             result.stats.wall_clock_seconds);
  return kOk;
}

int do_report(const std::vector<std::string>& paths, const std::string& format, std::ostream& out) {
  std::vector<runner::RunResult> runs;
  for (const auto& p : paths) {
    try {
      runs.push_back(runner::RunResult::from_json(ordered_json::parse(io::read_file(p))));
    } catch (const json::parse_error& e) {
      throw UsageError(p + ": " + e.what());
    }
  }
  out << runner::emit_report(runs, runner::parse_report_format(format));
  return kOk;
}

int do_eval(const std::string& pred_path, const std::string& data_path, const std::string& metric_text,
            std::ostream& out) {
  const auto predictions = io::read_predictions(std::filesystem::path(pred_path));
  const auto records = corpus::read_jsonl(std::filesystem::path(data_path));
  std::map<std::string, const corpus::ClaimRecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;

  std::vector<corpus::ClaimRecord> matched;
  std::vector<std::string> texts;
  for (const auto& [id, text] : predictions) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw UsageError("prediction for unknown id " + id);
    matched.push_back(*it->second);
    texts.push_back(text);
  }
  const auto metric_list = parse_metric_list(metric_text);
  const auto rows = runner::score_predictions(matched, texts, metric_list);
  const auto report = metrics::corpus_average(rows);
  ordered_json means = ordered_json::object();
  for (const auto& column : metrics::metric_columns(metric_list)) means[column] = report.means.at(column);
  out << ordered_json{{"count", report.count}, {"means", means}}.dump(2) << '\n';
  return kOk;
}

int do_retrieval(const std::string& path, const std::string& format, std::ostream& out) {
  const auto table = runner::run_retrieval_eval(io::read_judgments(std::filesystem::path(path)));
  if (format == "json") {
    out << table.to_json().dump(2) << '\n';
  } else if (format == "markdown" || format == "md") {
    out << table.to_markdown();
  } else {
    throw UsageError("unknown format " + format);
  }
  return kOk;
}

int do_human_eval(const std::string& path, std::ostream& out) {
  const auto means = metrics::aggregate_human_eval(io::read_ratings(std::filesystem::path(path)));
  ordered_json j = ordered_json::object();
  for (const auto aspect : metrics::kAspects) {
    if (const auto it = means.find(aspect); it != means.end()) j[std::string(metrics::aspect_name(aspect))] = it->second;
  }
  out << j.dump(2) << '\n';
  return kOk;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Claim normalization toolkit: ingest, prompt, run and evaluate", "claimnorm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("claimnorm 0.1.0"));

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Parse a fact-check feed into a split dataset JSONL");
  auto* cr = ingest->add_option("--claimreview", ingest_args.claimreview, "ClaimReview JSON-LD document");
  auto* gfc = ingest->add_option("--gfc", ingest_args.gfc, "Fact-check export (JSON array of records)");
  cr->excludes(gfc);
  ingest->add_option("--out", ingest_args.out, "Output JSONL")->required();
  ingest->add_option("--seed", ingest_args.seed, "Split seed");
  ingest->add_option("--test-size", ingest_args.test_size, "Test records (default: every two-reference record)");

  std::string stats_data;
  std::size_t bins = 20;
  auto* stats = app.add_subcommand("stats", "Dataset statistics and plot data");
  stats->add_option("--data", stats_data, "Dataset JSONL")->required();
  stats->add_option("--bins", bins, "Cosine histogram bins")->check(CLI::PositiveNumber);

  PromptArgs prompt_args;
  auto* prompt = app.add_subcommand("prompt", "Render one prompt");
  prompt->add_option("--kind", prompt_args.kind, "Prompt kind")->required();
  auto* post_opt = prompt->add_option("--post", prompt_args.post, "Post text");
  auto* id_opt = prompt->add_option("--id", prompt_args.id, "Record id from --data");
  post_opt->excludes(id_opt);
  prompt->add_option("--data", prompt_args.data, "Dataset JSONL (records and the train pool)");
  prompt->add_option("--k", prompt_args.k, "In-context examples");
  prompt->add_option("--example-set", prompt_args.example_set, "In-context example JSONL");
  prompt->add_option("--templates", prompt_args.templates, "Template directory");
  prompt->add_option("--token-limit", prompt_args.token_limit, "Token limit for token_limit prompts");
  prompt->add_option("--abstractness", prompt_args.abstractness, "Target for abstractness prompts");
  prompt->add_option("--keywords", prompt_args.keywords, "Comma-separated keywords for entity_centric prompts");
  prompt->add_flag("--sha", prompt_args.show_sha, "Also print the prompt hash");

  std::string config_path;
  std::string metrics_flag;
  std::string constant_text;
  std::map<std::string, std::string> run_flags;
  std::vector<std::pair<std::string, std::string>> run_values(run_settings().size());
  auto* run = app.add_subcommand("run", "Run one experiment and print its scores");
  run->add_option("--config", config_path, "Experiment config JSON");
  for (std::size_t i = 0; i < run_settings().size(); ++i) {
    const auto& s = run_settings()[i];
    run->add_option(s.flag, run_values[i].second, std::string(s.help) + " [env " + s.env + "]");
  }
  run->add_option("--metrics", metrics_flag, "Comma-separated metrics [env CLAIMNORM_METRICS]");
  run->add_option("--constant-text", constant_text, "Reply of the mock-constant backend");

  std::vector<std::string> report_runs;
  std::string report_format = "markdown";
  auto* report = app.add_subcommand("report", "Table of several saved runs");
  report->add_option("--runs", report_runs, "run_result.json files")->required();
  report->add_option("--format", report_format, "markdown, csv or json");

  std::string pred_path;
  std::string eval_data;
  std::string eval_metrics = "rouge1,rouge2,rougeL,bleu4,meteor";
  auto* eval = app.add_subcommand("eval", "Score a predictions JSONL against a dataset");
  eval->add_option("--pred", pred_path, "Predictions JSONL ({id, prediction})")->required();
  eval->add_option("--data", eval_data, "Dataset JSONL")->required();
  eval->add_option("--metrics", eval_metrics, "Comma-separated metrics");

  std::string judgments_path;
  std::string retrieval_format = "markdown";
  auto* retrieval = app.add_subcommand("retrieval-eval", "Precision at 1, 3 and 5 from relevance judgments");
  retrieval->add_option("--judgments", judgments_path, "Judgments JSONL")->required();
  retrieval->add_option("--format", retrieval_format, "markdown or json");

  std::string ratings_path;
  auto* human = app.add_subcommand("human-eval", "Mean human ratings per aspect");
  human->add_option("--ratings", ratings_path, "Ratings JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) {
      err << "run '" << sub->get_name() << " --help' for usage\n";
    }
    return kUsageError;
  }

  try {
    if (ingest->parsed()) return do_ingest(ingest_args, out);
    if (stats->parsed()) return do_stats(stats_data, bins, out);
    if (prompt->parsed()) return do_prompt(prompt_args, out);
    if (run->parsed()) {
      for (std::size_t i = 0; i < run_settings().size(); ++i) {
        const auto& s = run_settings()[i];
        if (run->count(s.flag) > 0) run_flags[s.flag] = run_values[i].second;
      }
      return do_run(config_path, run_flags, metrics_flag, constant_text, out);
    }
    if (report->parsed()) return do_report(report_runs, report_format, out);
    if (eval->parsed()) return do_eval(pred_path, eval_data, eval_metrics, out);
    if (retrieval->parsed()) return do_retrieval(judgments_path, retrieval_format, out);
    if (human->parsed()) return do_human_eval(ratings_path, out);
  } catch (const runner::RunAborted& e) {
    err << "run aborted: " << e.what() << '\n';
    return kRunFailure;
  } catch (const llm::BackendError& e) {
    err << "backend error: " << e.what() << '\n';
    return kRunFailure;
  } catch (const corpus::JsonlError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const corpus::ParseError& e) {
    err << "error: " << e.what() << " (byte " << e.offset() << ")\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

int run_cli(int argc, char** argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace claimnorm::cli
