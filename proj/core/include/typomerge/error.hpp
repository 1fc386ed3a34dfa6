#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace typomerge {

enum class ErrorCode {
  MalformedFile,
  EmptyTable,
  EmptyCategory,
  UnknownLanguage,
  InsufficientOverlap,
  ZeroVector,
  EmptyPool,
  AsymmetryTooLarge,
  NonzeroDiagonal,
  InvalidPolicy,
  AllPruned,
  SchemaMismatch,
  WeightSumInvalid,
  NonfiniteInput,
  LambdaOutOfRange,
  MalformedContainer,
  UnsupportedDtype,
  IoError,
  DuplicateLanguage,
  InvalidConfig,
  InvalidArgument,
};

/// Stable identifier used in CLI diagnostics, e.g. "AllPruned".
std::string_view to_string(ErrorCode code) noexcept;

/// The single exception type thrown by the library. `code()` is what callers
/// branch on; `what()` carries the human-readable context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Returns a copy with `context` prepended to the message.
  Error with_context(std::string_view context) const;

 private:
  ErrorCode code_;
};

}  // namespace typomerge
