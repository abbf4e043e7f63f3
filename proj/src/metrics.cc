#include "claimnorm/metrics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace claimnorm::metrics {
namespace {

long clipped_overlap(const textproc::NgramCounts& candidate, const textproc::NgramCounts& ref) {
  long overlap = 0;
  for (const auto& [gram, count] : candidate) {
    const auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

// Greedy one-to-one matching of equal forms: candidates right to left, each
// takes the right-most unused reference position with the same form.
struct Indexed {
  std::size_t position;
  std::string form;
};

void match_forms(std::vector<Indexed>& hyp, std::vector<Indexed>& ref,
                 std::vector<std::pair<std::size_t, std::size_t>>& matches) {
  std::unordered_map<std::string, std::vector<std::size_t>> slots;
  for (std::size_t j = 0; j < ref.size(); ++j) slots[ref[j].form].push_back(j);

  std::vector<bool> hyp_used(hyp.size(), false);
  std::vector<bool> ref_used(ref.size(), false);
  for (std::size_t i = hyp.size(); i-- > 0;) {
    auto it = slots.find(hyp[i].form);
    if (it == slots.end() || it->second.empty()) continue;
    const std::size_t j = it->second.back();
    it->second.pop_back();
    hyp_used[i] = true;
    ref_used[j] = true;
    matches.emplace_back(hyp[i].position, ref[j].position);
  }

  auto compact = [](std::vector<Indexed>& items, const std::vector<bool>& used) {
    std::vector<Indexed> rest;
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (!used[k]) rest.push_back(std::move(items[k]));
    }
    items = std::move(rest);
  };
  compact(hyp, hyp_used);
  compact(ref, ref_used);
}

}  // namespace

ScoreTriple ScoreTriple::from_pr(double precision, double recall) {
  const double sum = precision + recall;
  return ScoreTriple{precision, recall, sum > 0 ? 2.0 * precision * recall / sum : 0.0};
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

ScoreTriple rouge(const TokenSeq& hyp, const TokenSeq& ref, RougeVariant variant) {
  if (variant == RougeVariant::RL) {
    if (hyp.empty() || ref.empty()) return {};
    const auto lcs = static_cast<double>(lcs_length(hyp, ref));
    return ScoreTriple::from_pr(lcs / static_cast<double>(hyp.size()),
                                lcs / static_cast<double>(ref.size()));
  }
  const int n = variant == RougeVariant::R1 ? 1 : 2;
  const auto hyp_grams = textproc::ngrams(hyp, n);
  const auto ref_grams = textproc::ngrams(ref, n);
  const auto hyp_total = static_cast<double>(textproc::total_count(hyp_grams));
  const auto ref_total = static_cast<double>(textproc::total_count(ref_grams));
  if (hyp_total == 0 || ref_total == 0) return {};
  const auto overlap = static_cast<double>(clipped_overlap(hyp_grams, ref_grams));
  return ScoreTriple::from_pr(overlap / hyp_total, overlap / ref_total);
}

double bleu4(const TokenSeq& hyp, std::span<const TokenSeq> refs) {
  if (refs.empty()) throw std::invalid_argument("bleu4: at least one reference is required");
  if (hyp.empty()) return 0.0;

  std::array<double, 4> precisions{};
  for (int n = 1; n <= 4; ++n) {
    const auto hyp_grams = textproc::ngrams(hyp, n);
    textproc::NgramCounts max_ref;
    for (const auto& ref : refs) {
      for (const auto& [gram, count] : textproc::ngrams(ref, n)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    }
    const auto matches = static_cast<double>(clipped_overlap(hyp_grams, max_ref));
    const auto total =
        static_cast<double>(std::max<long>(1, textproc::total_count(hyp_grams)));
    if (n == 1 && matches == 0) return 0.0;
    precisions[static_cast<std::size_t>(n - 1)] = (matches > 0 ? matches : kBleuEpsilon) / total;
  }

  const auto hyp_len = static_cast<long>(hyp.size());
  long closest = static_cast<long>(refs.front().size());
  for (const auto& ref : refs) {
    const auto len = static_cast<long>(ref.size());
    const auto d = std::labs(len - hyp_len);
    const auto best = std::labs(closest - hyp_len);
    if (d < best || (d == best && len < closest)) closest = len;
  }
  const double bp = hyp_len > closest
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(closest) / static_cast<double>(hyp_len));

  double log_sum = 0;
  for (const double p : precisions) log_sum += 0.25 * std::log(p);
  return bp * std::exp(log_sum);
}

double meteor(const TokenSeq& hyp, const TokenSeq& ref, const MeteorParams& params) {
  if (hyp.empty() || ref.empty()) return 0.0;

  std::vector<Indexed> hyp_left;
  std::vector<Indexed> ref_left;
  for (std::size_t i = 0; i < hyp.size(); ++i) hyp_left.push_back({i, hyp[i]});
  for (std::size_t j = 0; j < ref.size(); ++j) ref_left.push_back({j, ref[j]});

  std::vector<std::pair<std::size_t, std::size_t>> matches;
  match_forms(hyp_left, ref_left, matches);
  for (auto& item : hyp_left) item.form = textproc::porter_stem(item.form);
  for (auto& item : ref_left) item.form = textproc::porter_stem(item.form);
  match_forms(hyp_left, ref_left, matches);

  if (matches.empty()) return 0.0;
  std::sort(matches.begin(), matches.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  std::size_t chunks = 1;
  for (std::size_t k = 0; k + 1 < matches.size(); ++k) {
    const bool adjacent = matches[k + 1].first == matches[k].first + 1 &&
                          matches[k + 1].second == matches[k].second + 1;
    if (!adjacent) ++chunks;
  }

  const auto m = static_cast<double>(matches.size());
  const double precision = m / static_cast<double>(hyp.size());
  const double recall = m / static_cast<double>(ref.size());
  const double fmean =
      precision * recall / (params.alpha * precision + (1 - params.alpha) * recall);
  const double fragmentation = static_cast<double>(chunks) / m;
  const double penalty = params.gamma * std::pow(fragmentation, params.beta);
  return (1 - penalty) * fmean;
}

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("harmonic_mean of no values");
  double inverse_sum = 0;
  for (const double v : values) {
    if (v <= 0) return 0.0;
    inverse_sum += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inverse_sum;
}

AbstractnessScore abstractness(const TokenSeq& post, const TokenSeq& claim) {
  if (claim.empty()) throw std::invalid_argument("abstractness: claim has no tokens");

  AbstractnessScore score;
  const auto claim_len = static_cast<double>(claim.size());
  score.unigram_p =
      clipped_overlap(textproc::ngrams(claim, 1), textproc::ngrams(post, 1)) / claim_len;
  score.lcs_p = static_cast<double>(lcs_length(claim, post)) / claim_len;

  std::vector<double> components{score.unigram_p};
  if (claim.size() >= 2) {
    score.bigram_p = static_cast<double>(clipped_overlap(textproc::ngrams(claim, 2),
                                                         textproc::ngrams(post, 2))) /
                     (claim_len - 1);
    components.push_back(score.bigram_p);
  }
  components.push_back(score.lcs_p);
  score.a = 1.0 - harmonic_mean(components);
  return score;
}

ScoreTriple aggregate_multi_ref(std::span<const ScoreTriple> per_reference) {
  if (per_reference.empty()) throw std::invalid_argument("aggregate_multi_ref: no references");
  const ScoreTriple* best = &per_reference.front();
  for (const auto& triple : per_reference) {
    if (triple.f1 > best->f1) best = &triple;
  }
  return *best;
}

double aggregate_multi_ref(std::span<const double> per_reference) {
  if (per_reference.empty()) throw std::invalid_argument("aggregate_multi_ref: no references");
  return *std::max_element(per_reference.begin(), per_reference.end());
}

std::string_view metric_name(Metric metric) {
  switch (metric) {
    case Metric::Rouge1: return "rouge1";
    case Metric::Rouge2: return "rouge2";
    case Metric::RougeL: return "rougeL";
    case Metric::Bleu4: return "bleu4";
    case Metric::Meteor: return "meteor";
    case Metric::Abstractness: return "abstractness";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  for (const Metric m : {Metric::Rouge1, Metric::Rouge2, Metric::RougeL, Metric::Bleu4,
                         Metric::Meteor, Metric::Abstractness}) {
    if (metric_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown metric: " + std::string(name));
}

bool is_triple_metric(Metric metric) {
  return metric == Metric::Rouge1 || metric == Metric::Rouge2 || metric == Metric::RougeL;
}

std::vector<std::string> metric_columns(Metric metric) {
  const std::string name(metric_name(metric));
  if (is_triple_metric(metric)) return {name + ".p", name + ".r", name + ".f1"};
  return {name};
}

std::vector<std::string> metric_columns(std::span<const Metric> metrics) {
  std::vector<std::string> out;
  for (const Metric m : metrics) {
    for (auto& column : metric_columns(m)) out.push_back(std::move(column));
  }
  return out;
}

ScoreRow score_example(const ScoringInput& input, std::span<const Metric> metrics) {
  if (input.references.empty()) throw std::invalid_argument("score_example: no references");
  ScoreRow row;
  for (const Metric metric : metrics) {
    const std::string name(metric_name(metric));
    if (is_triple_metric(metric)) {
      const RougeVariant variant = metric == Metric::Rouge1   ? RougeVariant::R1
                                   : metric == Metric::Rouge2 ? RougeVariant::R2
                                                              : RougeVariant::RL;
      std::vector<ScoreTriple> per_ref;
      for (const auto& ref : input.references) per_ref.push_back(rouge(input.hypothesis, ref, variant));
      const ScoreTriple best = aggregate_multi_ref(per_ref);
      row[name + ".p"] = best.precision;
      row[name + ".r"] = best.recall;
      row[name + ".f1"] = best.f1;
    } else if (metric == Metric::Bleu4) {
      row[name] = bleu4(input.hypothesis, input.references);
    } else if (metric == Metric::Meteor) {
      std::vector<double> per_ref;
      for (const auto& ref : input.references) per_ref.push_back(meteor(input.hypothesis, ref));
      row[name] = aggregate_multi_ref(per_ref);
    } else {
      // An empty prediction copies nothing from the post.
      row[name] = input.hypothesis.empty() ? 1.0 : abstractness(input.post, input.hypothesis).a;
    }
  }
  return row;
}

MetricReport corpus_average(std::span<const ScoreRow> rows) {
  if (rows.empty()) throw std::invalid_argument("corpus_average: no examples");
  MetricReport report;
  for (const auto& [column, _] : rows.front()) report.columns.push_back(column);
  std::map<std::string, double> sums;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != report.columns.size()) {
      throw std::invalid_argument("corpus_average: example " + std::to_string(i) +
                                  " has a different column set");
    }
    for (const auto& [column, value] : rows[i]) {
      if (!rows.front().contains(column)) {
        throw std::invalid_argument("corpus_average: unexpected column " + column);
      }
      sums[column] += value;
    }
  }
  for (const auto& [column, sum] : sums) report.means[column] = sum / static_cast<double>(rows.size());
  report.count = rows.size();
  return report;
}

double corpus_average(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("corpus_average: no examples");
  double sum = 0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace claimnorm::metrics
