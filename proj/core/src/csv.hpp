#pragma once

// Minimal comma-separated parsing shared by the typology and distance readers.
// Neither format uses quoting, so a plain split is sufficient.

#include <charconv>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace typomerge::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_row(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto end = comma == std::string_view::npos ? line.size() : comma;
    cells.emplace_back(trim(line.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

/// Reads the next non-blank line. Strips a UTF-8 BOM on the first line.
inline bool next_row(std::istream& in, std::string& line, bool& first) {
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    }
    if (!trim(line).empty()) return true;
  }
  return false;
}

/// Full-string decimal parse; no locale involvement.
inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace typomerge::detail
