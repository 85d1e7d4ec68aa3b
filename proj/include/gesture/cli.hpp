#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gesture::cli {

/// Runs the `gesture` command line. Records and reports go to `out`,
/// diagnostics and timing to `err`. Returns the process exit code:
/// 0 success, 1 usage error, 2 data error, 3 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Stand-in for robot execution: the command string bound to a gesture.
std::string task_action(const std::string& gesture);

}  // namespace gesture::cli
