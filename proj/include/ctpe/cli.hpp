#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctpe {

// Runs one CLI invocation (args exclude the program name) writing results to
// `out` and diagnostics to `err`. Returns the process exit code:
//   0 success, 2 usage error, 3 numerical failure, 4 configuration error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctpe
