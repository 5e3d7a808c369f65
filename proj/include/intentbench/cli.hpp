#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace intentbench {

/// Runs one command line (without the program name): cluster, induce, eval-task1, eval-task2,
/// propagate, sensitivity, diversity or rank.
///
/// Returns 0 on success, 1 for configuration errors and 2 for data errors. Every failure writes a
/// single line starting with "error:" to `err`; warnings are written as "warning:" lines.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace intentbench
