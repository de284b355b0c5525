#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace claro::cli {

/// Entry point behind main(): parses `args` (without the program name),
/// dispatches to the train / explain / casestudy / print-config subcommands
/// and returns the process exit code. 0 on success, 1 on user or config
/// errors, 2 on internal failures. All diagnostics go to `err`, command
/// output to `out`; nothing is printed to std::cout directly so tests can
/// drive the CLI in process.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace claro::cli
