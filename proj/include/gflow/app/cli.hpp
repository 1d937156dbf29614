#ifndef GFLOW_APP_CLI_HPP
#define GFLOW_APP_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace gflow::app {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2 };

/// Runs the command line `gflow <subcommand> [flags]`; args excludes the program name.
/// Human-readable output goes to out, diagnostics to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gflow::app

#endif  // GFLOW_APP_CLI_HPP
