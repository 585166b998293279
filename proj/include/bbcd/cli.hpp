#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bbcd::cli {

/// Parses the argument vector, dispatches the subcommand and writes the
/// report to `out` (errors as a {"error": {code, message}} object).
/// Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bbcd::cli
