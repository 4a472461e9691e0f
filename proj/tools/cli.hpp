#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace maskgen::cli {

// Exit statuses of the command line tool.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kDataError = 3,
  kPrerequisite = 4,
  kNumeric = 5,
};

// Runs one invocation; args excludes the program name. Progress and the
// resolved configuration go to `out`; failures print a single line
//   error: kind=<kind> message="<text>"
// to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace maskgen::cli
