#include "typomerge/language.hpp"

#include "typomerge/error.hpp"

namespace typomerge {

LanguageId::LanguageId(std::string code) : code_(std::move(code)) {
  if (!is_valid(code_)) {
    throw Error(ErrorCode::InvalidArgument, "invalid language id '" + code_ + "'");
  }
}

bool LanguageId::is_valid(std::string_view code) noexcept {
  if (code.empty() || code.size() > 8) return false;
  for (char c : code) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

}  // namespace typomerge
