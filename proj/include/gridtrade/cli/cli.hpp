#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridtrade::cli {

// Process exit codes.
enum Exit : int {
  kOk = 0,
  kFailure = 1, // rejected proof or other runtime error
  kBadFlags = 2,
  kBadScenario = 3,
  kNotConverged = 4,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gridtrade::cli
