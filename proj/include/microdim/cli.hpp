#pragma once

#include <iosfwd>

namespace microdim::cli {

enum ExitCode { kSuccess = 0, kValidation = 1, kNumerical = 2 };

/// Entry point of the `microdim` tool. Messages go to `out`; diagnostics and progress to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace microdim::cli
