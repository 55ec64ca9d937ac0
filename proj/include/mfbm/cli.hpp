#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfbm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

// Parses argv (argv[0] is the program name), dispatches the subcommand and returns the exit
// code: 0 success, 2 validation or domain error (including bad flags), 3 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfbm::cli
