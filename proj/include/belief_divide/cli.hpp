#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace belief_divide {

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_success = 0, exit_runtime_error = 1, exit_usage_error = 2 };

/// Runs one CLI invocation. args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace belief_divide
