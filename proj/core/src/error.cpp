#include "typomerge/error.hpp"

namespace typomerge {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::EmptyCategory: return "EmptyCategory";
    case ErrorCode::UnknownLanguage: return "UnknownLanguage";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::AsymmetryTooLarge: return "AsymmetryTooLarge";
    case ErrorCode::NonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorCode::InvalidPolicy: return "InvalidPolicy";
    case ErrorCode::AllPruned: return "AllPruned";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::WeightSumInvalid: return "WeightSumInvalid";
    case ErrorCode::NonfiniteInput: return "NonfiniteInput";
    case ErrorCode::LambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorCode::MalformedContainer: return "MalformedContainer";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DuplicateLanguage: return "DuplicateLanguage";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error Error::with_context(std::string_view context) const {
  std::string message(context);
  message += ": ";
  message += what();
  return Error(code_, message);
}

}  // namespace typomerge
