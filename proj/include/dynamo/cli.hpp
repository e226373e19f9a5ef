#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dynamo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the `dynamo` executable. Subcommands: gen-data, run,
// report, check.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Fast invariant suite; prints one PASS/FAIL line per check and returns the
// number of failures.
int run_checks(std::ostream& out);

}  // namespace dynamo
