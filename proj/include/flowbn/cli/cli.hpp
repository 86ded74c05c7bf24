#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flowbn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

// Runs the command line `args` (args[0] is the program name). Results go to
// `out` as key=value lines, diagnostics to `err`. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flowbn::cli
