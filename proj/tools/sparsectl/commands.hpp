#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sparsectl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitDomain = 1,  // assumption, infeasibility, mismatch or divergence
  kExitUsage = 2,   // bad arguments or unreadable/unwritable files
};

// Full command line including the program name in args[0]. Normal output
// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sparsectl::cli
