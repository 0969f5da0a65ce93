#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tvacal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (args[0] is the program name). Data goes to files or
/// `out`; diagnostics go to `err`. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tvacal::cli
