#pragma once

// Command-line front end. Kept in the library so tests can drive it without
// spawning processes.

#include <ostream>
#include <string>
#include <vector>

namespace filmnet::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  ///< shape, domain and other library errors
  kExitConfig = 2,   ///< bad flags or config file
  kExitIo = 3,       ///< unreadable/unwritable files, parse and coverage errors
  kExitNumeric = 4,  ///< NaN/Inf during training or evaluation
};

/// Environment variable naming the default output root ("runs" when unset).
inline constexpr const char* kOutputRootEnv = "FILMNET_OUTPUT_ROOT";

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace filmnet::cli
