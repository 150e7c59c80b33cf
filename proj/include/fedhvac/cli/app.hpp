#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fedhvac::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,    // bad flag or subcommand
  kExitConfig = 3,   // config parse or validation failure
  kExitIo = 4,       // unreadable/unwritable file, bad checkpoint
  kExitRuntime = 5,  // failure while training or evaluating
};

/// Runs one CLI invocation. Errors are reported as a single line on `err`:
///   error kind=<usage|config|io|runtime> code=<N> message=<text>
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace fedhvac::cli
