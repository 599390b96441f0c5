#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sparsenmf::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kDataError = 2, kIoError = 3 };

/// Runs one command line (without the program name). Results go to `out`,
/// diagnostics to `err`; the return value is the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sparsenmf::cli
