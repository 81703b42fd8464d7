#pragma once

#include <ostream>

namespace posid::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kSolver = 4, kOther = 1 };

/// Parses argv and runs one subcommand. Diagnostics go to `err`, reports to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace posid::cli
