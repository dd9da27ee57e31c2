#pragma once

#include <iosfwd>

namespace weaklabel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDivergence = 4;

// Runs one subcommand. Reports go to `out` when --out is absent or "-";
// diagnostics go to `err`. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace weaklabel::cli
