#pragma once

#include <ostream>

namespace hnsynth {

// Entry point of the `hnsynth` tool. Returns the process exit code:
// 0 ok, 2 usage, 3 I/O, 4 format, 5 invariant violation.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hnsynth
