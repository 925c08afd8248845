#pragma once

#include <iosfwd>

namespace topoforge::cli {

// Parses argv, runs the selected pipeline stage, and reports through the
// given streams. Returns 0 on success, 1 on usage/validation/config errors,
// and 2 when a generation run loses more than a tenth of its cells.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Same, wired to stdout/stderr.
int run(int argc, const char* const* argv);

}  // namespace topoforge::cli
