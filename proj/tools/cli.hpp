#pragma once

#include <iosfwd>

namespace domescan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Parses argv and runs one subcommand. Usage errors print the synopsis to
/// `err` and return 1; library errors print their code and return 2.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace domescan::cli
