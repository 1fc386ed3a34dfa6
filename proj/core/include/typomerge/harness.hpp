#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "typomerge/aggregation.hpp"
#include "typomerge/checkpoint.hpp"
#include "typomerge/proxy.hpp"
#include "typomerge/typology.hpp"
#include "typomerge/weighting.hpp"

// Synthetic verification world: languages are points in a latent space,
// typology features are noisy thresholded projections of those points and
// oracle adapters are affine images of them. Typology therefore predicts
// parameters by construction, which makes proxy quality measurable against a
// held-out oracle.

namespace typomerge::harness {

using LatentPoint = std::vector<double>;

/// Two 8x8 matrices with biases: down/up projections of a tiny adapter.
CheckpointSchema default_tensor_schema();

struct WorldConfig {
  int n_languages = 16;
  int latent_dim = 2;
  int n_features = 32;
  CheckpointSchema tensor_schema = default_tensor_schema();
  double feature_noise = 0.05;
  double adapter_noise = 0.5;
  std::uint64_t seed = 0;
  /// Optional fixed latent points (one per language) instead of sampling.
  std::vector<LatentPoint> latent_points;

  /// Throws Error(InvalidConfig).
  void validate() const;
};

struct SyntheticWorld {
  WorldConfig config;
  std::vector<LanguageId> languages;  // "en", "l01", "l02", ...
  std::map<LanguageId, LatentPoint> latent;
  TypologyTable typology;
  AdapterPool oracles;
  /// Spearman correlation between latent and featural typology distances.
  double typology_spearman = 0.0;
};

/// Ids used for a world of `n` languages: "en" then "l01".."l<n-1>".
std::vector<LanguageId> world_language_ids(int n);

/// Deterministic in `cfg` (including seed). Throws Error(InvalidConfig) when
/// the config is out of bounds or the generated typology does not correlate
/// positively with latent distance.
SyntheticWorld generate_world(const WorldConfig& cfg);

struct Scores {
  double param_l2 = 0.0;
  double functional_mse = 0.0;
};

/// `probes` standard-normal input vectors of length `dim`, deterministic in
/// (seed, dim).
std::vector<std::vector<double>> probe_inputs(std::uint64_t seed, std::size_t probes, std::size_t dim);

/// param_l2 is the Euclidean distance over all parameters. functional_mse
/// treats every rank-2 tensor W[out,in] (plus its "...bias" sibling of shape
/// [out], if any) as the affine map x -> Wx + b, applies both adapters to
/// probe_inputs(seed, probes, in) and averages the squared output gap over
/// all probes and output coordinates. Without rank-2 tensors it falls back to
/// the mean squared parameter gap.
Scores evaluate_proxy(const AdapterCheckpoint& proxy, const AdapterCheckpoint& oracle, std::size_t probes,
                      std::uint64_t seed);

/// Smallest achievable param_l2 over convex combinations of `pool` (simplex
/// constrained least squares). Diagnostic reference only.
double best_convex_l2(const AdapterPool& pool, const AdapterCheckpoint& oracle);

struct ComparisonOptions {
  std::set<Method> methods = {Method::Tipa, Method::Uniform, Method::Closest, Method::Ntbg};
  PruningPolicy policy;
  FeatureCategory category = FeatureCategory::Featural;
  std::size_t probes = 64;
  /// Restrict the pool; empty means every language except the target.
  std::set<LanguageId> pool;
  double lambda = 0.5;
  CombinationMode ntbg_mode = CombinationMode::Convex;
};

struct MethodScore {
  Method method;
  Scores scores;
};

struct ComparisonReport {
  std::uint64_t seed = 0;
  LanguageId target{"und"};
  std::vector<MethodScore> rows;  // in Method enum order
  double best_convex_l2 = 0.0;
  std::vector<ProxyReport> reports;
};

/// Builds each requested proxy from the pool (the target's oracle is held
/// out) and scores it against the target's oracle.
ComparisonReport run_comparison(const SyntheticWorld& world, const LanguageId& target,
                                const ComparisonOptions& options = {});
ComparisonReport run_comparison(const WorldConfig& cfg, const LanguageId& target,
                                const ComparisonOptions& options = {});

/// Header: seed,target,method,param_l2,functional_mse,best_convex_l2
std::string comparison_csv_header();
std::string comparison_csv_rows(const ComparisonReport& report);
/// Fixed-width text table over several reports.
std::string comparison_table(const std::vector<ComparisonReport>& reports);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace typomerge::harness
