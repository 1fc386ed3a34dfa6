#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "typomerge/aggregation.hpp"
#include "typomerge/typology.hpp"
#include "typomerge/weighting.hpp"

namespace typomerge {

inline constexpr std::string_view kToolName = "typomerge";
inline constexpr std::string_view kToolVersion = "0.1.0";

enum class Method { Tipa, Uniform, Closest, Ntbg };

std::string_view to_string(Method method) noexcept;
std::optional<Method> parse_method(std::string_view name) noexcept;

/// Typology table, precomputed matrix, or nothing (uniform averaging only).
using DistanceSource = std::variant<std::monostate, const TypologyTable*, const DistanceMatrix*>;

struct ProxySpec {
  LanguageId target{"und"};
  Method method = Method::Tipa;
  FeatureCategory category = FeatureCategory::Featural;
  PruningPolicy policy;
  DistanceOptions distance_options;
  double lambda = 0.5;
  CombinationMode ntbg_mode = CombinationMode::Convex;
  std::vector<std::string> skip_tensors;
  unsigned threads = 1;
};

struct FileDigest {
  std::string path;
  std::string sha256;

  friend bool operator==(const FileDigest&, const FileDigest&) = default;
};

/// Provenance for one proxy construction.
struct ProxyReport {
  LanguageId target{"und"};
  Method method = Method::Tipa;
  /// Absent for uniform averaging, which uses no distances.
  std::optional<DistanceKind> distance_kind;
  /// Only meaningful for tipa.
  std::optional<PruningPolicy> policy;
  /// Present iff method == tipa.
  std::optional<SimilarityWeights> weights;
  /// Candidate pool after removing the target.
  std::vector<LanguageId> pool;
  /// Adapters that actually contributed parameters.
  std::vector<LanguageId> sources;
  /// closest / ntbg: the typologically closest adapter.
  std::optional<LanguageId> closest;
  /// ntbg: English adapter, mode and lambda.
  std::optional<LanguageId> english;
  std::optional<CombinationMode> ntbg_mode;
  std::optional<double> lambda;
  /// SHA-256 of the serialized container; `path` is filled once written.
  FileDigest output;
  std::optional<FileDigest> manifest;
  std::string tool_version{kToolVersion};
  /// UTC ISO-8601; empty until stamped.
  std::string timestamp;
};

nlohmann::json to_json(const ProxyReport& report);

struct ProxyResult {
  AdapterCheckpoint checkpoint;
  ProxyReport report;
};

/// Builds one proxy adapter for `spec.target` from `pool`. The target's own
/// adapter, when present in the pool, is never used. `english` is required
/// for ntbg.
ProxyResult build_proxy(const AdapterPool& pool, const std::optional<LanguageId>& english,
                        const DistanceSource& distances, const ProxySpec& spec);

/// Distance vector of `target` against `pool` from whichever source is set.
DistanceVector distances_for(const DistanceSource& distances, const LanguageId& target,
                             const std::set<LanguageId>& pool, FeatureCategory category,
                             const DistanceOptions& options = {});

}  // namespace typomerge
