#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "claimnorm/textproc.h"

namespace claimnorm::metrics {

using textproc::TokenSeq;

/// Precision / recall / F1, all in [0, 1]. F1 is zero when p + r == 0.
struct ScoreTriple {
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  static ScoreTriple from_pr(double precision, double recall);
  friend bool operator==(const ScoreTriple&, const ScoreTriple&) = default;
};

enum class RougeVariant { R1, R2, RL };

/// ROUGE-N uses clipped n-gram multiset overlap, ROUGE-L the longest common
/// subsequence. Precision is normalized by the hypothesis, recall by the
/// reference. Any empty side scores (0, 0, 0).
ScoreTriple rouge(const TokenSeq& hyp, const TokenSeq& ref, RougeVariant variant);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Additive smoothing applied to the numerator of an n-gram order that has
/// no clipped matches.
inline constexpr double kBleuEpsilon = 0.1;

/// Sentence BLEU-4: clipped precisions for n = 1..4 against all references,
/// uniform weights, brevity penalty against the closest reference length
/// (shorter wins ties). Orders with zero matches use kBleuEpsilon / count.
/// Returns 0 for an empty hypothesis or when no unigram matches.
/// Throws std::invalid_argument when refs is empty.
double bleu4(const TokenSeq& hyp, std::span<const TokenSeq> refs);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

/// METEOR with exact then Porter-stem matching (no synonym stage).
/// Alignment is greedy: hypothesis tokens are visited right to left and each
/// takes the right-most unused reference token with the same form.
double meteor(const TokenSeq& hyp, const TokenSeq& ref, const MeteorParams& params = {});

/// a = 1 - X, X the harmonic mean of the claim's unigram, bigram and LCS
/// precision against the post.
struct AbstractnessScore {
  double a = 1;
  double unigram_p = 0;
  double bigram_p = 0;
  double lcs_p = 0;
};

/// A component whose denominator is empty (a one-token claim has no bigrams)
/// is left out of the harmonic mean. Throws std::invalid_argument for an
/// empty claim.
AbstractnessScore abstractness(const TokenSeq& post, const TokenSeq& claim);

/// Zero when any value is zero. Throws on an empty input.
double harmonic_mean(std::span<const double> values);

/// Sparse, L2-normalized TF-IDF vector sorted by term.
using SparseVector = std::vector<std::pair<std::string, double>>;

/// Corpus TF-IDF: raw term counts times idf = ln((1 + N) / (1 + df)) + 1,
/// L2-normalized. Texts are run through clean_text and tokenize.
class TfIdfIndex {
 public:
  TfIdfIndex() = default;
  explicit TfIdfIndex(std::span<const std::string> documents);

  std::size_t document_count() const { return documents_; }
  double idf(const std::string& term) const;
  SparseVector vectorize(std::string_view text) const;

 private:
  std::size_t documents_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

double dot(const SparseVector& a, const SparseVector& b);

/// Cosine of the two texts' TF-IDF vectors over `corpus`, clamped to [0, 1].
/// 0 when either vector is zero.
double cosine_similarity(std::string_view a, std::string_view b, const TfIdfIndex& corpus);

/// Same, with the corpus being just the two texts.
double cosine_similarity(std::string_view a, std::string_view b);

/// Triple with the highest F1; ties go to the earliest reference.
ScoreTriple aggregate_multi_ref(std::span<const ScoreTriple> per_reference);
double aggregate_multi_ref(std::span<const double> per_reference);

// ---------------------------------------------------------------------------
// Metric catalogue and per-example score rows.

enum class Metric { Rouge1, Rouge2, RougeL, Bleu4, Meteor, Abstractness };

std::string_view metric_name(Metric metric);
/// Accepts the names produced by metric_name ("rouge1", "rougeL", "bleu4", ...).
Metric parse_metric(std::string_view name);
bool is_triple_metric(Metric metric);
/// Flat column names: "rouge1.p", "rouge1.r", "rouge1.f1" or "bleu4".
std::vector<std::string> metric_columns(Metric metric);
std::vector<std::string> metric_columns(std::span<const Metric> metrics);

/// One example's scores keyed by column name.
using ScoreRow = std::map<std::string, double>;

struct ScoringInput {
  TokenSeq hypothesis;
  std::vector<TokenSeq> references;
  TokenSeq post;
};

/// Scores one example against all of its references. ROUGE and METEOR take
/// the per-reference maximum; BLEU-4 clips against all references jointly;
/// abstractness compares the hypothesis with the post.
ScoreRow score_example(const ScoringInput& input, std::span<const Metric> metrics);

/// Reference kernel: one example after another.
std::vector<ScoreRow> score_batch_serial(std::span<const ScoringInput> inputs,
                                         std::span<const Metric> metrics);
/// OpenMP kernel; produces the same rows as score_batch_serial.
std::vector<ScoreRow> score_batch(std::span<const ScoringInput> inputs,
                                  std::span<const Metric> metrics);

/// TF-IDF cosine for each (a, b) pair against a shared corpus.
std::vector<double> pair_cosines_serial(const TfIdfIndex& corpus,
                                        std::span<const std::pair<std::string, std::string>> pairs);
std::vector<double> pair_cosines(const TfIdfIndex& corpus,
                                 std::span<const std::pair<std::string, std::string>> pairs);

struct MetricReport {
  std::vector<std::string> columns;
  std::map<std::string, double> means;
  std::size_t count = 0;
};

/// Column-wise arithmetic mean, summed in row order. Rows must share the same
/// columns. Throws std::invalid_argument on empty input or mismatched rows.
MetricReport corpus_average(std::span<const ScoreRow> rows);
double corpus_average(std::span<const double> values);

// ---------------------------------------------------------------------------
// Retrieval precision and human ratings.

enum class InputKind { Post, NormalizedClaim };

std::string_view input_kind_name(InputKind kind);
InputKind parse_input_kind(std::string_view name);

/// Three binary relevance votes for each retrieved rank (rank 1 first).
struct RelevanceJudgment {
  std::string instance_id;
  InputKind input_kind = InputKind::Post;
  std::vector<std::array<int, 3>> votes;
};

/// Throws std::invalid_argument when a vote is not 0 or 1.
void validate(const RelevanceJudgment& judgment);

/// At least two of the three annotators said relevant.
bool majority_relevant(const std::array<int, 3>& votes);

/// Mean over instances of `kind` of (majority-relevant ranks in the top k) / k.
/// Throws when k is outside 1..5, when an instance has fewer than k ranks, or
/// when no instance of `kind` exists.
double precision_at_k(std::span<const RelevanceJudgment> judgments, int k, InputKind kind);

enum class Aspect { Fluency, Coherence, Relevance, Consistency, SelfContextualization };
inline constexpr std::array<Aspect, 5> kAspects = {Aspect::Fluency, Aspect::Coherence,
                                                   Aspect::Relevance, Aspect::Consistency,
                                                   Aspect::SelfContextualization};
std::string_view aspect_name(Aspect aspect);

/// Five evaluators' 1..5 ratings per aspect for one instance.
struct HumanRatings {
  std::string instance_id;
  std::map<Aspect, std::vector<int>> ratings;
};

/// Mean over the five evaluators, then over instances, per aspect. Throws
/// std::invalid_argument naming the instance and aspect for malformed input.
std::map<Aspect, double> aggregate_human_eval(std::span<const HumanRatings> instances);

}  // namespace claimnorm::metrics
