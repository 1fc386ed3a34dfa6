#pragma once

#include <cstdint>
#include <ctime>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "typomerge/error.hpp"

namespace typomerge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitAllPruned = 3;
inline constexpr int kExitSchema = 4;

int exit_code_for(ErrorCode code) noexcept;

/// Parses argv and runs one subcommand. Never throws; diagnostics go to `err`
/// as a single `error[<Code>]: <message>` line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// UTC ISO-8601 timestamp, honouring SOURCE_DATE_EPOCH when set.
std::string timestamp_now();
std::string format_utc(std::time_t t);

/// "1..3" -> 1,2,3; "1,4,9" -> 1,4,9. Throws Error(InvalidArgument).
std::vector<std::uint64_t> parse_seed_list(const std::string& spec);

}  // namespace typomerge::cli
