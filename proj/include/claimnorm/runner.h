#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "claimnorm/corpus.h"
#include "claimnorm/llm.h"
#include "claimnorm/metrics.h"
#include "claimnorm/prompts.h"
#include "claimnorm/textproc.h"
#include "json.hpp"

namespace claimnorm::runner {

/// Which completion backend a run talks to.
struct BackendSpec {
  std::string type = "mock-echo";  // mock-echo | mock-constant | http
  std::string constant_text;       // mock-constant
  std::string base_url;            // http
  std::optional<std::string> path;
  llm::ApiStyle style = llm::ApiStyle::Completions;
  llm::ClientOptions client;
};

struct ExperimentConfig {
  std::string name;  // report row label; defaults to the prompt kind
  std::filesystem::path dataset;
  corpus::Split split = corpus::Split::Test;
  prompts::PromptKind kind = prompts::PromptKind::Cacn;
  std::size_t k = 4;
  /// In-context pool. Unset: the shipped example set for CACN, the train
  /// split of the dataset for DIRECT and QGUIDED.
  std::optional<std::filesystem::path> example_set;
  std::optional<std::filesystem::path> templates_dir;
  prompts::ControlInput control{.token_limit = 10, .abstractness = 0.8, .keywords = {}};
  llm::GenerationConfig generation;
  std::vector<metrics::Metric> metrics = {metrics::Metric::Rouge1, metrics::Metric::Rouge2,
                                          metrics::Metric::RougeL, metrics::Metric::Bleu4,
                                          metrics::Metric::Meteor};
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "runs";
  std::filesystem::path cache_path = "runs/cache.jsonl";
  BackendSpec backend;
  double max_failure_rate = 0.10;

  /// Throws std::invalid_argument for an empty metric list or an invalid
  /// generation config.
  void validate() const;
  std::string display_name() const;
  nlohmann::ordered_json to_json() const;
  /// Unknown keys are rejected; missing keys keep their defaults.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct ExampleResult {
  std::string id;
  std::string prompt_sha;
  std::string prediction;
  metrics::ScoreRow scores;
  std::optional<std::string> error;
};

struct RunStats {
  double wall_clock_seconds = 0;
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t failures = 0;
};

struct RunResult {
  std::string name;
  prompts::PromptKind kind = prompts::PromptKind::Cacn;
  nlohmann::ordered_json config;
  std::vector<ExampleResult> examples;  // sorted by id
  metrics::MetricReport report;         // over examples without errors
  RunStats stats;

  /// Everything except `stats`; identical for identical (config, cache).
  nlohmann::ordered_json deterministic_json() const;
  nlohmann::ordered_json to_json() const;
  static RunResult from_json(const nlohmann::ordered_json& j);
};

/// Raised when more than max_failure_rate of the examples fail. The manifest
/// lists completed and failed ids; re-running against the same cache
/// resumes where the failed run stopped.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, std::filesystem::path manifest)
      : std::runtime_error(what), manifest_(std::move(manifest)) {}
  const std::filesystem::path& manifest() const { return manifest_; }

 private:
  std::filesystem::path manifest_;
};

std::shared_ptr<llm::Backend> make_backend(const BackendSpec& spec, const std::string& api_key);

/// The in-context pool a run draws from (empty for kinds without examples
/// or k = 0). `records` supplies the train split when no example set is set.
std::vector<prompts::InContextExample> load_example_pool(const ExperimentConfig& config,
                                                         std::span<const corpus::ClaimRecord> records);

/// Renders the prompt for one record as the run would.
prompts::RenderedPrompt render_for_record(const ExperimentConfig& config, const corpus::ClaimRecord& record,
                                          std::span<const prompts::InContextExample> pool,
                                          const prompts::TemplateSet& templates);

/// Scores predictions against the records' references (and posts, for
/// abstractness). Rows come back in input order.
std::vector<metrics::ScoreRow> score_predictions(std::span<const corpus::ClaimRecord> records,
                                                 std::span<const std::string> predictions,
                                                 std::span<const metrics::Metric> metrics);

/// render -> complete -> parse -> score over one split. Writes
/// run_result.json and predictions.jsonl into config.output_dir.
RunResult run_experiment(const ExperimentConfig& config, llm::Client& client, llm::CompletionCache& cache);

enum class ReportFormat { Csv, Json, Markdown };
ReportFormat parse_report_format(std::string_view name);

/// Column labels of the Table-2 layout, e.g. "ROUGE-1 P", "BLEU-4".
std::vector<std::string> report_columns(std::span<const metrics::Metric> metrics);

/// One row per run with scores x100 at two decimals. With two or more runs a
/// delta row compares the target run (the CACN run, else the last one) with
/// the best other run per column: (target - best) / best x 100.
std::string emit_report(std::span<const RunResult> results, ReportFormat format);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges over [0, 1]
  std::vector<std::size_t> counts;
};

struct Distributions {
  Histogram cosine;  // per record: mean post/reference TF-IDF cosine
  textproc::BoxStats claim_lengths;
  textproc::BoxStats post_lengths;

  nlohmann::ordered_json to_json() const;
};

Histogram histogram(std::span<const double> values, std::size_t bins);
Distributions emit_distributions(std::span<const corpus::ClaimRecord> dataset, std::size_t bins = 20);

struct RetrievalTable {
  std::map<metrics::InputKind, std::array<double, 3>> rows;  // P@1, P@3, P@5

  std::string to_markdown() const;
  nlohmann::ordered_json to_json() const;
};

/// Throws std::invalid_argument when either input kind has no judgments.
RetrievalTable run_retrieval_eval(std::span<const metrics::RelevanceJudgment> judgments);

}  // namespace claimnorm::runner
