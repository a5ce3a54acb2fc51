#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace psguard::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Summaries and
/// help go to `out`, diagnostics to `err`. Log verbosity comes from the
/// PSGUARD_LOG environment variable (trace, debug, info, warn, error, off).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psguard::cli
