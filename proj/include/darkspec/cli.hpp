#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace darkspec::cli {

enum ExitStatus { kPass = 0, kCheckFailed = 1, kUsageError = 2 };

/// Runs the command line in-process. argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace darkspec::cli
