#pragma once

#include <iosfwd>

namespace kroninfer::cli {

/// Exit codes: 0 ok, 1 other runtime failure (e.g. dense capacity), 2 I/O,
/// 3 solver divergence, 4 malformed input, 64 usage.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace kroninfer::cli
