#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace shapereg {

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Entry point of the `shapereg` tool with subcommands fit, test, simulate
/// and mixing. Results go to `out` (or --out), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace shapereg
