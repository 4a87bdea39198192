#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace carelab::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kVerificationFailed = 2,
  kBackendUnavailable = 3,
};

/// Runs one invocation. `args` excludes the program name.
int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace carelab::cli
