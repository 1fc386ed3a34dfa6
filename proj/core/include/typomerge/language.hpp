#pragma once

#include <compare>
#include <functional>
#include <string>
#include <string_view>

namespace typomerge {

/// ISO 639-1/639-3 style language code: 1-8 characters from [a-z0-9_].
/// Ordering is plain lexicographic byte order, which every deterministic
/// iteration in the library relies on.
class LanguageId {
 public:
  /// Throws Error(InvalidArgument) on an invalid code.
  explicit LanguageId(std::string code);

  static bool is_valid(std::string_view code) noexcept;

  const std::string& str() const noexcept { return code_; }

  friend bool operator==(const LanguageId&, const LanguageId&) = default;
  friend std::strong_ordering operator<=>(const LanguageId& a, const LanguageId& b) {
    return a.code_.compare(b.code_) <=> 0;
  }

 private:
  std::string code_;
};

}  // namespace typomerge

template <>
struct std::hash<typomerge::LanguageId> {
  std::size_t operator()(const typomerge::LanguageId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
