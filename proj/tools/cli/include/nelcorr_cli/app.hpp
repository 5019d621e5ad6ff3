#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nelcorr::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,      // I/O and anything unclassified
  kConfig = 2,       // malformed arguments or configuration
  kBackend = 3,      // numeric backend errors
  kDiagnostics = 4,  // clamp-rate or sampling-envelope thresholds
};

// Full command line including the program name.  Data goes to --out (or `out`
// when absent), messages to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nelcorr::cli
