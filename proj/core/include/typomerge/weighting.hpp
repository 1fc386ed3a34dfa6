#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <variant>

#include "typomerge/language.hpp"
#include "typomerge/typology.hpp"

namespace typomerge {

struct NoPruning {
  friend bool operator==(const NoPruning&, const NoPruning&) = default;
};

/// Keep the k nearest sources.
struct TopK {
  std::size_t k = 5;
  friend bool operator==(const TopK&, const TopK&) = default;
};

/// Keep sources whose similarity (1 - normalized distance) is strictly above tau.
struct SimilarityThreshold {
  double tau = 0.33;
  friend bool operator==(const SimilarityThreshold&, const SimilarityThreshold&) = default;
};

/// Restriction of the source pool applied before weighting.
class PruningPolicy {
 public:
  using Variant = std::variant<NoPruning, TopK, SimilarityThreshold>;

  PruningPolicy() = default;
  /// Throws Error(InvalidPolicy) when k == 0 or tau is outside [0,1].
  PruningPolicy(Variant variant);  // NOLINT(google-explicit-constructor)

  static PruningPolicy none() { return {}; }
  static PruningPolicy top_k(std::size_t k) { return PruningPolicy(TopK{k}); }
  static PruningPolicy threshold(double tau) { return PruningPolicy(SimilarityThreshold{tau}); }

  const Variant& variant() const noexcept { return variant_; }
  bool is_none() const noexcept { return std::holds_alternative<NoPruning>(variant_); }

  /// "none", "top-k:5" or "threshold:0.33".
  std::string to_string() const;

  friend bool operator==(const PruningPolicy&, const PruningPolicy&) = default;

 private:
  Variant variant_;
};

/// Softmax similarity weights over the retained sources. Keys are
/// lexicographic; every weight is positive and they sum to 1.
struct SimilarityWeights {
  LanguageId target;
  DistanceKind kind = DistanceKind::Featural;
  PruningPolicy policy;
  std::map<LanguageId, double> weights;

  friend bool operator==(const SimilarityWeights&, const SimilarityWeights&) = default;
};

/// w_s = exp(1 - d_s) / sum_s' exp(1 - d_s') over normalized distances.
SimilarityWeights similarity_weights(const DistanceVector& dv, const PruningPolicy& policy = {});

/// Drops sources according to `policy`. Normalized distances are kept as-is
/// (still relative to the unpruned pool). Throws Error(AllPruned) rather than
/// returning an empty vector.
DistanceVector apply_pruning(const DistanceVector& dv, const PruningPolicy& policy);

/// distance_vector -> apply_pruning -> similarity_weights.
SimilarityWeights proxy_weights(const LanguageId& target, const std::set<LanguageId>& pool,
                                const TypologyTable& table, FeatureCategory category,
                                const PruningPolicy& policy, const DistanceOptions& options = {});

SimilarityWeights proxy_weights(const LanguageId& target, const std::set<LanguageId>& pool,
                                const DistanceMatrix& matrix, const PruningPolicy& policy);

}  // namespace typomerge
