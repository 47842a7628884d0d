#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdiq::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;  // selftest failure, unexpected errors
inline constexpr int kUsage = 2;
inline constexpr int kData = 3;
inline constexpr int kAssumption = 4;
inline constexpr int kSolver = 5;

/// Entry point of the sdiqrng tool; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace sdiq::cli
