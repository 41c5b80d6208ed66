#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sensitest::cli {

/// Exit codes: 0 success (including negative scientific findings),
/// 1 internal or I/O failure, 2 usage or validation error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sensitest::cli
