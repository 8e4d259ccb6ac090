#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qcompat::cli {

// Exit codes.
inline constexpr int kDecided = 0;
inline constexpr int kInputError = 1;
inline constexpr int kUndecided = 2;
inline constexpr int kSelftestFailed = 3;

/// Runs one command line (args exclude the program name). Machine-readable
/// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qcompat::cli
