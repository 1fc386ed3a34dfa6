#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "csv.hpp"
#include "typomerge/error.hpp"
#include "typomerge/typology.hpp"

namespace typomerge {

DistanceMatrix::DistanceMatrix(std::vector<LanguageId> languages, std::vector<double> values) {
  const std::size_t n = languages.size();
  if (n == 0) throw Error(ErrorCode::MalformedFile, "distance matrix is empty");
  if (values.size() != n * n) throw Error(ErrorCode::MalformedFile, "distance matrix is not square");

  // Re-index into sorted language order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return languages[a] < languages[b]; });
  for (std::size_t i = 1; i < n; ++i) {
    if (languages[order[i]] == languages[order[i - 1]]) {
      throw Error(ErrorCode::DuplicateLanguage, "language '" + languages[order[i]].str() + "' appears twice");
    }
  }

  languages_.reserve(n);
  for (auto i : order) languages_.push_back(languages[i]);
  values_.assign(n * n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = values[order[i] * n + order[j]];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::MalformedFile, "distance(" + languages_[i].str() + ", " + languages_[j].str() +
                                                  ") is outside [0,1]");
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (values[order[i] * n + order[i]] != 0.0) {
      throw Error(ErrorCode::NonzeroDiagonal, "self-distance of '" + languages_[i].str() + "' is not zero");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double upper = values[order[i] * n + order[j]];
      const double lower = values[order[j] * n + order[i]];
      if (std::abs(upper - lower) > kSymmetryTolerance) {
        throw Error(ErrorCode::AsymmetryTooLarge, "distance(" + languages_[i].str() + ", " + languages_[j].str() +
                                                      ") differs from its transpose by more than 1e-9");
      }
      const double avg = upper == lower ? upper : 0.5 * (upper + lower);
      values_[i * n + j] = avg;
      values_[j * n + i] = avg;
    }
  }
}

std::size_t DistanceMatrix::index_of(const LanguageId& lang) const {
  auto it = std::lower_bound(languages_.begin(), languages_.end(), lang);
  if (it == languages_.end() || *it != lang) {
    throw Error(ErrorCode::UnknownLanguage, "unknown language '" + lang.str() + "'");
  }
  return static_cast<std::size_t>(it - languages_.begin());
}

bool DistanceMatrix::contains(const LanguageId& lang) const {
  return std::binary_search(languages_.begin(), languages_.end(), lang);
}

double DistanceMatrix::at(const LanguageId& a, const LanguageId& b) const {
  return values_[index_of(a) * languages_.size() + index_of(b)];
}

DistanceMatrix parse_distance_matrix(std::istream& in) {
  std::string line;
  bool first = true;
  if (!detail::next_row(in, line, first)) throw Error(ErrorCode::MalformedFile, "distance CSV is empty");
  const auto header = detail::split_row(line);
  if (header.size() < 2) throw Error(ErrorCode::MalformedFile, "distance CSV header has no languages");

  std::vector<LanguageId> columns;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (!LanguageId::is_valid(header[i])) {
      throw Error(ErrorCode::MalformedFile, "invalid language id '" + header[i] + "' in header");
    }
    columns.emplace_back(header[i]);
  }
  const std::size_t n = columns.size();

  std::map<LanguageId, std::vector<double>> rows;
  while (detail::next_row(in, line, first)) {
    const auto cells = detail::split_row(line);
    if (cells.size() != n + 1) {
      throw Error(ErrorCode::MalformedFile, "distance row '" + cells[0] + "' has " + std::to_string(cells.size()) +
                                                " cells, expected " + std::to_string(n + 1));
    }
    if (!LanguageId::is_valid(cells[0])) {
      throw Error(ErrorCode::MalformedFile, "invalid language id '" + cells[0] + "'");
    }
    std::vector<double> row;
    row.reserve(n);
    for (std::size_t j = 1; j <= n; ++j) {
      auto v = detail::parse_double(cells[j]);
      if (!v) throw Error(ErrorCode::MalformedFile, "'" + cells[j] + "' in row '" + cells[0] + "' is not a number");
      row.push_back(*v);
    }
    if (!rows.emplace(LanguageId(cells[0]), std::move(row)).second) {
      throw Error(ErrorCode::MalformedFile, "duplicate row '" + cells[0] + "'");
    }
  }
  if (rows.size() != n) throw Error(ErrorCode::MalformedFile, "distance matrix is not square");

  std::vector<double> values;
  values.reserve(n * n);
  for (const auto& lang : columns) {
    auto it = rows.find(lang);
    if (it == rows.end()) {
      throw Error(ErrorCode::MalformedFile, "column '" + lang.str() + "' has no matching row");
    }
    values.insert(values.end(), it->second.begin(), it->second.end());
  }
  return DistanceMatrix(std::move(columns), std::move(values));
}

DistanceMatrix load_precomputed_distances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open distance file " + path.string());
  try {
    return parse_distance_matrix(in);
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

}  // namespace typomerge
