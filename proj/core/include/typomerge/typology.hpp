#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "typomerge/language.hpp"

namespace typomerge {

/// Typological feature categories. `Featural` is the union of all the others
/// and never appears as a tag on an individual feature.
enum class FeatureCategory { Featural, Morphological, Syntactic, Phonological, Inventory };

std::string_view to_string(FeatureCategory category) noexcept;
/// Accepts the lowercase names used in files and on the command line.
std::optional<FeatureCategory> parse_category(std::string_view name) noexcept;

/// Where a DistanceVector's raw values came from.
enum class DistanceKind { Featural, Morphological, Syntactic, Phonological, Inventory, Precomputed };

std::string_view to_string(DistanceKind kind) noexcept;
DistanceKind kind_of(FeatureCategory category) noexcept;

struct Feature {
  std::string name;
  FeatureCategory category;

  friend bool operator==(const Feature&, const Feature&) = default;
};

using FeatureValues = std::vector<std::optional<double>>;

/// Per-language typological feature vectors. Values lie in [0,1]; a missing
/// value is std::nullopt. Immutable after construction.
class TypologyTable {
 public:
  /// Validates: non-empty, every vector aligned with `features`, values in
  /// [0,1], no feature tagged Featural. Throws Error(MalformedFile|EmptyTable).
  TypologyTable(std::vector<Feature> features, std::map<LanguageId, FeatureValues> vectors);

  const std::vector<Feature>& features() const noexcept { return features_; }
  const std::map<LanguageId, FeatureValues>& vectors() const noexcept { return vectors_; }

  bool contains(const LanguageId& lang) const { return vectors_.contains(lang); }
  /// Throws Error(UnknownLanguage).
  const FeatureValues& values(const LanguageId& lang) const;
  std::vector<LanguageId> languages() const;

  friend bool operator==(const TypologyTable&, const TypologyTable&) = default;

 private:
  std::vector<Feature> features_;
  std::map<LanguageId, FeatureValues> vectors_;
};

TypologyTable parse_typology(std::istream& in);
TypologyTable load_typology(const std::filesystem::path& path);
/// Inverse of parse_typology; values use round-trip precision.
std::string format_typology(const TypologyTable& table);

/// Restricts the table to one category. Featural is the identity. Languages
/// left with no non-missing value are dropped.
TypologyTable feature_subset(const TypologyTable& table, FeatureCategory category);

struct DistanceOptions {
  /// Minimum number of jointly non-missing coordinates.
  std::size_t min_shared_features = 1;
};

/// Cosine distance over jointly non-missing coordinates.
double distance(const TypologyTable& table, const LanguageId& a, const LanguageId& b,
                const DistanceOptions& options = {});

/// Symmetric, zero-diagonal matrix of precomputed distances in [0,1].
class DistanceMatrix {
 public:
  /// `values` is row-major |languages| x |languages|. Symmetrizes entries that
  /// differ by at most `kSymmetryTolerance`, rejects larger gaps.
  DistanceMatrix(std::vector<LanguageId> languages, std::vector<double> values);

  static constexpr double kSymmetryTolerance = 1e-9;

  /// Sorted.
  const std::vector<LanguageId>& languages() const noexcept { return languages_; }
  bool contains(const LanguageId& lang) const;
  /// Throws Error(UnknownLanguage).
  double at(const LanguageId& a, const LanguageId& b) const;

 private:
  std::size_t index_of(const LanguageId& lang) const;

  std::vector<LanguageId> languages_;
  std::vector<double> values_;
};

DistanceMatrix parse_distance_matrix(std::istream& in);
DistanceMatrix load_precomputed_distances(const std::filesystem::path& path);

struct DistanceEntry {
  double raw = 0.0;
  double normalized = 0.0;

  friend bool operator==(const DistanceEntry&, const DistanceEntry&) = default;
};

/// Target-to-source distances over a pool, keyed lexicographically.
struct DistanceVector {
  LanguageId target;
  DistanceKind kind = DistanceKind::Featural;
  std::map<LanguageId, DistanceEntry> entries;

  friend bool operator==(const DistanceVector&, const DistanceVector&) = default;
};

/// Builds a DistanceVector from raw distances, applying per-pool min-max
/// normalization (all-equal raw values normalize to 0).
DistanceVector make_distance_vector(LanguageId target, DistanceKind kind,
                                    const std::map<LanguageId, double>& raw);

DistanceVector distance_vector(const TypologyTable& table, const LanguageId& target,
                               const std::set<LanguageId>& pool, FeatureCategory category,
                               const DistanceOptions& options = {});

DistanceVector distance_vector(const DistanceMatrix& matrix, const LanguageId& target,
                               const std::set<LanguageId>& pool);

}  // namespace typomerge
