#pragma once

#include <iosfwd>

namespace brickstage::cli {

enum ExitCode : int {
  kSuccess = 0,
  kVerificationFailed = 1,  // validation violations, digest mismatch
  kUsageError = 2,          // bad flags, unreadable or unparseable input, missing assets
};

// Entry point shared by the executable and the tests. Digests and validation
// reports go to `out`; errors and notes go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace brickstage::cli
