#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hotda::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2, numerical = 3 };

/// Runs one command line (without the program name). Results go to `out`, diagnostics and
/// errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hotda::cli
