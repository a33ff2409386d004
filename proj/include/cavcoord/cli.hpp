#pragma once

#include <iosfwd>

namespace cavcoord {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,     ///< configuration or I/O problem
  kExitInfeasible = 2,  ///< scheduler or trajectory solver could not serve a vehicle
  kExitUsage = 64,
};

/// Entry point of the `cavcoord` tool: `run`, `compare` and `validate`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cavcoord
