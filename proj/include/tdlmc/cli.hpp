#pragma once

// The tdlmc command line: check, compile, simulate and oracle.

#include <iosfwd>
#include <string>
#include <vector>

namespace tdlmc::cli {

enum ExitCode : int { Safe = 0, Unsafe = 1, BoundExceeded = 2, InputError = 3 };

/// Runs one command; `args` excludes the program name. Output goes to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tdlmc::cli
