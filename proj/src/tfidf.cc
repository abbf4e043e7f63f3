#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "claimnorm/metrics.h"

namespace claimnorm::metrics {

TfIdfIndex::TfIdfIndex(std::span<const std::string> documents) : documents_(documents.size()) {
  for (const auto& doc : documents) {
    const auto tokens = textproc::tokenize(textproc::clean_text(doc));
    const std::set<std::string> unique(tokens.begin(), tokens.end());
    for (const auto& term : unique) ++df_[term];
  }
}

double TfIdfIndex::idf(const std::string& term) const {
  const auto it = df_.find(term);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(documents_)) / (1.0 + df)) + 1.0;
}

SparseVector TfIdfIndex::vectorize(std::string_view text) const {
  std::map<std::string, double> counts;
  for (auto& token : textproc::tokenize(textproc::clean_text(text))) counts[token] += 1.0;

  SparseVector vec;
  vec.reserve(counts.size());
  double norm_sq = 0;
  for (const auto& [term, tf] : counts) {
    const double w = tf * idf(term);
    vec.emplace_back(term, w);
    norm_sq += w * w;
  }
  if (norm_sq > 0) {
    const double norm = std::sqrt(norm_sq);
    for (auto& entry : vec) entry.second /= norm;
  }
  return vec;
}

double dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

double cosine_similarity(std::string_view a, std::string_view b, const TfIdfIndex& corpus) {
  const auto va = corpus.vectorize(a);
  const auto vb = corpus.vectorize(b);
  if (va.empty() || vb.empty()) return 0.0;
  return std::clamp(dot(va, vb), 0.0, 1.0);
}

double cosine_similarity(std::string_view a, std::string_view b) {
  const std::vector<std::string> docs{std::string(a), std::string(b)};
  return cosine_similarity(a, b, TfIdfIndex(docs));
}

}  // namespace claimnorm::metrics
