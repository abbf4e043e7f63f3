#include <stdexcept>

#include "claimnorm/metrics.h"

namespace claimnorm::metrics {

std::string_view input_kind_name(InputKind kind) {
  return kind == InputKind::Post ? "post" : "normalized_claim";
}

InputKind parse_input_kind(std::string_view name) {
  if (name == "post") return InputKind::Post;
  if (name == "normalized_claim") return InputKind::NormalizedClaim;
  throw std::invalid_argument("unknown input kind: " + std::string(name));
}

void validate(const RelevanceJudgment& judgment) {
  for (std::size_t rank = 0; rank < judgment.votes.size(); ++rank) {
    for (const int vote : judgment.votes[rank]) {
      if (vote != 0 && vote != 1) {
        throw std::invalid_argument("judgment " + judgment.instance_id + " rank " +
                                    std::to_string(rank + 1) + ": vote must be 0 or 1");
      }
    }
  }
}

bool majority_relevant(const std::array<int, 3>& votes) {
  return votes[0] + votes[1] + votes[2] >= 2;
}

double precision_at_k(std::span<const RelevanceJudgment> judgments, int k, InputKind kind) {
  if (k < 1 || k > 5) throw std::invalid_argument("precision_at_k: k must be in 1..5");
  double sum = 0;
  std::size_t instances = 0;
  for (const auto& judgment : judgments) {
    if (judgment.input_kind != kind) continue;
    validate(judgment);
    if (judgment.votes.size() < static_cast<std::size_t>(k)) {
      throw std::invalid_argument("judgment " + judgment.instance_id + " has only " +
                                  std::to_string(judgment.votes.size()) + " ranks, need " +
                                  std::to_string(k));
    }
    int relevant = 0;
    for (int rank = 0; rank < k; ++rank) {
      relevant += majority_relevant(judgment.votes[static_cast<std::size_t>(rank)]) ? 1 : 0;
    }
    sum += static_cast<double>(relevant) / k;
    ++instances;
  }
  if (instances == 0) {
    throw std::invalid_argument("precision_at_k: no judgments for input kind " +
                                std::string(input_kind_name(kind)));
  }
  return sum / static_cast<double>(instances);
}

std::string_view aspect_name(Aspect aspect) {
  switch (aspect) {
    case Aspect::Fluency: return "fluency";
    case Aspect::Coherence: return "coherence";
    case Aspect::Relevance: return "relevance";
    case Aspect::Consistency: return "consistency";
    case Aspect::SelfContextualization: return "self_contextualization";
  }
  return "unknown";
}

std::map<Aspect, double> aggregate_human_eval(std::span<const HumanRatings> instances) {
  if (instances.empty()) throw std::invalid_argument("aggregate_human_eval: no instances");
  std::map<Aspect, double> sums;
  for (const auto& instance : instances) {
    for (const Aspect aspect : kAspects) {
      const std::string where =
          "instance " + instance.instance_id + ", aspect " + std::string(aspect_name(aspect));
      const auto it = instance.ratings.find(aspect);
      if (it == instance.ratings.end()) throw std::invalid_argument(where + ": missing ratings");
      if (it->second.size() != 5) {
        throw std::invalid_argument(where + ": expected 5 ratings, got " +
                                    std::to_string(it->second.size()));
      }
      double total = 0;
      for (const int r : it->second) {
        if (r < 1 || r > 5) {
          throw std::invalid_argument(where + ": rating " + std::to_string(r) + " outside 1..5");
        }
        total += r;
      }
      sums[aspect] += total / 5.0;
    }
  }
  std::map<Aspect, double> means;
  for (const auto& [aspect, sum] : sums) means[aspect] = sum / static_cast<double>(instances.size());
  return means;
}

}  // namespace claimnorm::metrics
