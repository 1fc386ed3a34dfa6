#include "typomerge/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "typomerge/error.hpp"

namespace typomerge {

PruningPolicy::PruningPolicy(Variant variant) : variant_(std::move(variant)) {
  if (auto* top = std::get_if<TopK>(&variant_); top && top->k == 0) {
    throw Error(ErrorCode::InvalidPolicy, "top-k requires k >= 1");
  }
  if (auto* th = std::get_if<SimilarityThreshold>(&variant_); th && !(th->tau >= 0.0 && th->tau <= 1.0)) {
    throw Error(ErrorCode::InvalidPolicy, "similarity threshold must lie in [0,1]");
  }
}

std::string PruningPolicy::to_string() const {
  std::ostringstream out;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NoPruning>) {
          out << "none";
        } else if constexpr (std::is_same_v<T, TopK>) {
          out << "top-k:" << p.k;
        } else {
          out << "threshold:" << p.tau;
        }
      },
      variant_);
  return out.str();
}

SimilarityWeights similarity_weights(const DistanceVector& dv, const PruningPolicy& policy) {
  if (dv.entries.empty()) {
    throw Error(ErrorCode::EmptyPool, "no source languages for target '" + dv.target.str() + "'");
  }
  // Softmax is shift-invariant: exp(1 - d) / sum exp(1 - d') equals
  // exp(d_min - d) / sum exp(d_min - d'), which never overflows.
  double d_min = dv.entries.begin()->second.normalized;
  for (const auto& [_, e] : dv.entries) d_min = std::min(d_min, e.normalized);

  std::vector<double> terms;
  terms.reserve(dv.entries.size());
  double total = 0.0;
  for (const auto& [_, e] : dv.entries) {
    terms.push_back(std::exp(d_min - e.normalized));
    total += terms.back();
  }

  SimilarityWeights out{dv.target, dv.kind, policy, {}};
  std::size_t i = 0;
  for (const auto& [lang, _] : dv.entries) out.weights.emplace(lang, terms[i++] / total);
  return out;
}

DistanceVector apply_pruning(const DistanceVector& dv, const PruningPolicy& policy) {
  if (dv.entries.empty()) {
    throw Error(ErrorCode::EmptyPool, "no source languages for target '" + dv.target.str() + "'");
  }
  DistanceVector out{dv.target, dv.kind, {}};

  if (const auto* top = std::get_if<TopK>(&policy.variant())) {
    std::vector<std::pair<LanguageId, DistanceEntry>> ranked(dv.entries.begin(), dv.entries.end());
    // Map order is lexicographic, so a stable sort breaks ties by LanguageId.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second.normalized < b.second.normalized; });
    if (top->k < ranked.size()) ranked.erase(ranked.begin() + static_cast<std::ptrdiff_t>(top->k), ranked.end());
    out.entries.insert(ranked.begin(), ranked.end());
  } else if (const auto* th = std::get_if<SimilarityThreshold>(&policy.variant())) {
    for (const auto& [lang, e] : dv.entries) {
      if (1.0 - e.normalized > th->tau) out.entries.emplace(lang, e);
    }
    if (out.entries.empty()) {
      throw Error(ErrorCode::AllPruned, "pruning policy " + policy.to_string() +
                                            " removed every source for target '" + dv.target.str() + "'");
    }
  } else {
    out.entries = dv.entries;
  }
  return out;
}

SimilarityWeights proxy_weights(const LanguageId& target, const std::set<LanguageId>& pool,
                                const TypologyTable& table, FeatureCategory category,
                                const PruningPolicy& policy, const DistanceOptions& options) {
  const auto dv = distance_vector(table, target, pool, category, options);
  return similarity_weights(apply_pruning(dv, policy), policy);
}

SimilarityWeights proxy_weights(const LanguageId& target, const std::set<LanguageId>& pool,
                                const DistanceMatrix& matrix, const PruningPolicy& policy) {
  const auto dv = distance_vector(matrix, target, pool);
  return similarity_weights(apply_pruning(dv, policy), policy);
}

}  // namespace typomerge
