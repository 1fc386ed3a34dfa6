#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "typomerge/checkpoint.hpp"
#include "typomerge/language.hpp"
#include "typomerge/typology.hpp"

namespace typomerge {

/// Adapters keyed by source language.
using AdapterPool = std::map<LanguageId, AdapterCheckpoint>;

struct WeightedSource {
  LanguageId language;
  const AdapterCheckpoint* checkpoint = nullptr;
  double weight = 0.0;
};

struct AggregateOptions {
  /// Recorded as provenance.method in the output manifest.
  std::string method = "tipa";
  /// Language written into the output manifest; empty means "proxy".
  std::string target;
  /// fnmatch(3) patterns. Matching tensors are not averaged; they are copied
  /// from the highest-weight source (ties go to the lexicographically first).
  std::vector<std::string> skip_tensors;
  /// Worker threads across tensors; 0 picks hardware concurrency. Output does
  /// not depend on this value.
  unsigned threads = 1;
};

/// out[t][i] = sum_s w_s * x_s[t][i], accumulated in double in lexicographic
/// source order, then rounded to f32. Requires identical schemas, positive
/// weights summing to 1 within 1e-6, and finite inputs.
AdapterCheckpoint aggregate(std::span<const WeightedSource> sources, const AggregateOptions& options = {});

/// Convenience overload: weights select and weight members of `pool`.
AdapterCheckpoint aggregate(const AdapterPool& pool, const std::map<LanguageId, double>& weights,
                            const AggregateOptions& options = {});

/// Equal-weight mean over the whole pool (method = "uniform").
AdapterCheckpoint uniform_average(const AdapterPool& pool, AggregateOptions options = {});

/// Source with the smallest normalized distance; ties go to the
/// lexicographically first LanguageId.
LanguageId closest_adapter(const DistanceVector& dv);

enum class CombinationMode { Convex, Sum };

std::string_view to_string(CombinationMode mode) noexcept;

struct AdditiveOptions {
  double lambda = 0.5;
  CombinationMode mode = CombinationMode::Convex;
  std::string target;
};

/// Convex: (1 - lambda) * english + lambda * closest.
/// Sum:    english + lambda * closest.
AdapterCheckpoint additive_combination(const LanguageId& english_id, const AdapterCheckpoint& english,
                                       const LanguageId& closest_id, const AdapterCheckpoint& closest,
                                       const AdditiveOptions& options = {});

}  // namespace typomerge
