#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cpda::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // demo-saturation self-test mismatch
inline constexpr int kExitUsage = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitIo = 4;

/// Runs the tool with `args` (args[0] is the program name). Normal output goes to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cpda::cli
