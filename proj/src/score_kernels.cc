// Per-example scoring fan-out. Every output slot depends only on its own
// input, so the OpenMP kernels reproduce the serial ones exactly.

#include <cstddef>

#include "claimnorm/metrics.h"

namespace claimnorm::metrics {

std::vector<ScoreRow> score_batch_serial(std::span<const ScoringInput> inputs,
                                         std::span<const Metric> metrics) {
  std::vector<ScoreRow> rows;
  rows.reserve(inputs.size());
  for (const auto& input : inputs) rows.push_back(score_example(input, metrics));
  return rows;
}

std::vector<ScoreRow> score_batch(std::span<const ScoringInput> inputs,
                                  std::span<const Metric> metrics) {
  std::vector<ScoreRow> rows(inputs.size());
  const auto n = static_cast<std::ptrdiff_t>(inputs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    rows[static_cast<std::size_t>(i)] =
        score_example(inputs[static_cast<std::size_t>(i)], metrics);
  }
  return rows;
}

std::vector<double> pair_cosines_serial(
    const TfIdfIndex& corpus, std::span<const std::pair<std::string, std::string>> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) out.push_back(cosine_similarity(a, b, corpus));
  return out;
}

std::vector<double> pair_cosines(const TfIdfIndex& corpus,
                                 std::span<const std::pair<std::string, std::string>> pairs) {
  std::vector<double> out(pairs.size());
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& [a, b] = pairs[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = cosine_similarity(a, b, corpus);
  }
  return out;
}

}  // namespace claimnorm::metrics
