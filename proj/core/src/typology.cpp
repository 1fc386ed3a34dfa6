#include "typomerge/typology.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <set>

#include "csv.hpp"
#include "typomerge/error.hpp"

namespace typomerge {

std::string_view to_string(FeatureCategory category) noexcept {
  switch (category) {
    case FeatureCategory::Featural: return "featural";
    case FeatureCategory::Morphological: return "morphological";
    case FeatureCategory::Syntactic: return "syntactic";
    case FeatureCategory::Phonological: return "phonological";
    case FeatureCategory::Inventory: return "inventory";
  }
  return "featural";
}

std::optional<FeatureCategory> parse_category(std::string_view name) noexcept {
  for (auto c : {FeatureCategory::Featural, FeatureCategory::Morphological, FeatureCategory::Syntactic,
                 FeatureCategory::Phonological, FeatureCategory::Inventory}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view to_string(DistanceKind kind) noexcept {
  switch (kind) {
    case DistanceKind::Featural: return "featural";
    case DistanceKind::Morphological: return "morphological";
    case DistanceKind::Syntactic: return "syntactic";
    case DistanceKind::Phonological: return "phonological";
    case DistanceKind::Inventory: return "inventory";
    case DistanceKind::Precomputed: return "precomputed";
  }
  return "featural";
}

DistanceKind kind_of(FeatureCategory category) noexcept {
  switch (category) {
    case FeatureCategory::Featural: return DistanceKind::Featural;
    case FeatureCategory::Morphological: return DistanceKind::Morphological;
    case FeatureCategory::Syntactic: return DistanceKind::Syntactic;
    case FeatureCategory::Phonological: return DistanceKind::Phonological;
    case FeatureCategory::Inventory: return DistanceKind::Inventory;
  }
  return DistanceKind::Featural;
}

TypologyTable::TypologyTable(std::vector<Feature> features, std::map<LanguageId, FeatureValues> vectors)
    : features_(std::move(features)), vectors_(std::move(vectors)) {
  if (vectors_.empty()) throw Error(ErrorCode::EmptyTable, "typology table has no languages");
  for (const auto& f : features_) {
    if (f.category == FeatureCategory::Featural) {
      throw Error(ErrorCode::MalformedFile, "feature '" + f.name + "' is tagged featural; use a concrete category");
    }
  }
  for (const auto& [lang, values] : vectors_) {
    if (values.size() != features_.size()) {
      throw Error(ErrorCode::MalformedFile, "vector for '" + lang.str() + "' has " + std::to_string(values.size()) +
                                                " values, expected " + std::to_string(features_.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] && !(*values[i] >= 0.0 && *values[i] <= 1.0)) {
        throw Error(ErrorCode::MalformedFile, "value for '" + lang.str() + "', feature '" + features_[i].name +
                                                  "' is outside [0,1]");
      }
    }
  }
}

const FeatureValues& TypologyTable::values(const LanguageId& lang) const {
  auto it = vectors_.find(lang);
  if (it == vectors_.end()) throw Error(ErrorCode::UnknownLanguage, "unknown language '" + lang.str() + "'");
  return it->second;
}

std::vector<LanguageId> TypologyTable::languages() const {
  std::vector<LanguageId> out;
  out.reserve(vectors_.size());
  for (const auto& [lang, _] : vectors_) out.push_back(lang);
  return out;
}

TypologyTable parse_typology(std::istream& in) {
  std::string line;
  bool first = true;
  auto malformed = [](const std::string& what) { return Error(ErrorCode::MalformedFile, what); };

  if (!detail::next_row(in, line, first)) throw malformed("typology CSV is empty");
  const auto header = detail::split_row(line);
  if (header.size() < 2 || header[0] != "lang") {
    throw malformed("typology header must start with 'lang' followed by at least one feature");
  }
  if (!detail::next_row(in, line, first)) throw malformed("typology CSV lacks the '#category' row");
  const auto tags = detail::split_row(line);
  if (tags.empty() || tags[0] != "#category") throw malformed("second row must start with '#category'");
  if (tags.size() != header.size()) throw malformed("'#category' row length differs from header");

  std::vector<Feature> features;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].empty()) throw malformed("empty feature name in column " + std::to_string(i + 1));
    if (!seen.insert(header[i]).second) throw malformed("duplicate feature name '" + header[i] + "'");
    auto category = parse_category(tags[i]);
    if (!category || *category == FeatureCategory::Featural) {
      throw malformed("unknown category tag '" + tags[i] + "' for feature '" + header[i] + "'");
    }
    features.push_back({header[i], *category});
  }

  std::map<LanguageId, FeatureValues> vectors;
  std::size_t row = 2;
  while (detail::next_row(in, line, first)) {
    ++row;
    const auto cells = detail::split_row(line);
    if (cells.size() != header.size()) {
      throw malformed("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    if (!LanguageId::is_valid(cells[0])) throw malformed("invalid language id '" + cells[0] + "'");
    FeatureValues values;
    values.reserve(features.size());
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (cells[i].empty()) {
        values.emplace_back(std::nullopt);
        continue;
      }
      auto v = detail::parse_double(cells[i]);
      if (!v) throw malformed("row " + std::to_string(row) + ": '" + cells[i] + "' is not a number");
      if (!(*v >= 0.0 && *v <= 1.0)) {
        throw malformed("row " + std::to_string(row) + ": value " + cells[i] + " is outside [0,1]");
      }
      values.emplace_back(*v);
    }
    if (!vectors.emplace(LanguageId(cells[0]), std::move(values)).second) {
      throw malformed("duplicate language '" + cells[0] + "'");
    }
  }
  if (vectors.empty()) throw Error(ErrorCode::EmptyTable, "typology CSV has no language rows");
  return TypologyTable(std::move(features), std::move(vectors));
}

TypologyTable load_typology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open typology file " + path.string());
  try {
    return parse_typology(in);
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

std::string format_typology(const TypologyTable& table) {
  std::string out = "lang";
  for (const auto& f : table.features()) out += "," + f.name;
  out += "\n#category";
  for (const auto& f : table.features()) out += "," + std::string(to_string(f.category));
  out += "\n";
  char buf[32];
  for (const auto& [lang, values] : table.vectors()) {
    out += lang.str();
    for (const auto& v : values) {
      out += ",";
      if (v) {
        std::snprintf(buf, sizeof(buf), "%.17g", *v);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

TypologyTable feature_subset(const TypologyTable& table, FeatureCategory category) {
  if (category == FeatureCategory::Featural) return table;

  std::vector<std::size_t> keep;
  std::vector<Feature> features;
  for (std::size_t i = 0; i < table.features().size(); ++i) {
    if (table.features()[i].category == category) {
      keep.push_back(i);
      features.push_back(table.features()[i]);
    }
  }
  if (keep.empty()) {
    throw Error(ErrorCode::EmptyCategory, "no features tagged " + std::string(to_string(category)));
  }

  std::map<LanguageId, FeatureValues> vectors;
  for (const auto& [lang, values] : table.vectors()) {
    FeatureValues subset;
    subset.reserve(keep.size());
    bool any = false;
    for (auto i : keep) {
      subset.push_back(values[i]);
      any = any || values[i].has_value();
    }
    if (any) vectors.emplace(lang, std::move(subset));
  }
  if (vectors.empty()) {
    throw Error(ErrorCode::EmptyTable, "no language has " + std::string(to_string(category)) + " values");
  }
  return TypologyTable(std::move(features), std::move(vectors));
}

double distance(const TypologyTable& table, const LanguageId& a, const LanguageId& b,
                const DistanceOptions& options) {
  const auto& va = table.values(a);
  const auto& vb = table.values(b);

  std::size_t shared = 0;
  double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (!va[i] || !vb[i]) continue;
    ++shared;
    dot += *va[i] * *vb[i];
    norm_a += *va[i] * *va[i];
    norm_b += *vb[i] * *vb[i];
  }
  const std::size_t required = std::max<std::size_t>(options.min_shared_features, 1);
  if (shared < required) {
    throw Error(ErrorCode::InsufficientOverlap, "'" + a.str() + "' and '" + b.str() + "' share " +
                                                    std::to_string(shared) + " non-missing features, need " +
                                                    std::to_string(required));
  }
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw Error(ErrorCode::ZeroVector, "zero shared feature vector for '" +
                                           (norm_a == 0.0 ? a.str() : b.str()) + "' against '" +
                                           (norm_a == 0.0 ? b.str() : a.str()) + "'");
  }
  if (a == b) return 0.0;
  // sqrt of the product keeps identical vectors at exactly zero distance.
  const double cosine = dot / std::sqrt(norm_a * norm_b);
  return std::clamp(1.0 - cosine, 0.0, 1.0);
}

DistanceVector make_distance_vector(LanguageId target, DistanceKind kind,
                                    const std::map<LanguageId, double>& raw) {
  if (raw.empty()) throw Error(ErrorCode::EmptyPool, "no source languages for target '" + target.str() + "'");
  double lo = raw.begin()->second, hi = lo;
  for (const auto& [_, d] : raw) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  DistanceVector dv{std::move(target), kind, {}};
  const double span = hi - lo;
  for (const auto& [lang, d] : raw) {
    const double normalized = span > 0.0 ? std::clamp((d - lo) / span, 0.0, 1.0) : 0.0;
    dv.entries.emplace(lang, DistanceEntry{d, normalized});
  }
  return dv;
}

DistanceVector distance_vector(const TypologyTable& table, const LanguageId& target,
                               const std::set<LanguageId>& pool, FeatureCategory category,
                               const DistanceOptions& options) {
  if (!table.contains(target)) throw Error(ErrorCode::UnknownLanguage, "unknown language '" + target.str() + "'");
  const TypologyTable subset = feature_subset(table, category);
  if (!subset.contains(target)) {
    throw Error(ErrorCode::UnknownLanguage, "target '" + target.str() + "' has no " +
                                                std::string(to_string(category)) + " features");
  }
  std::map<LanguageId, double> raw;
  for (const auto& source : pool) {
    if (source == target) continue;
    try {
      if (!subset.contains(source)) {
        throw Error(ErrorCode::UnknownLanguage, table.contains(source)
                                                    ? "no " + std::string(to_string(category)) + " features"
                                                    : "unknown language '" + source.str() + "'");
      }
      raw.emplace(source, distance(subset, target, source, options));
    } catch (const Error& e) {
      throw e.with_context("source '" + source.str() + "'");
    }
  }
  return make_distance_vector(target, kind_of(category), raw);
}

DistanceVector distance_vector(const DistanceMatrix& matrix, const LanguageId& target,
                               const std::set<LanguageId>& pool) {
  if (!matrix.contains(target)) throw Error(ErrorCode::UnknownLanguage, "unknown language '" + target.str() + "'");
  std::map<LanguageId, double> raw;
  for (const auto& source : pool) {
    if (source == target) continue;
    try {
      raw.emplace(source, matrix.at(target, source));
    } catch (const Error& e) {
      throw e.with_context("source '" + source.str() + "'");
    }
  }
  return make_distance_vector(target, DistanceKind::Precomputed, raw);
}

}  // namespace typomerge
