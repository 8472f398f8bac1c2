#pragma once

#include <iosfwd>

namespace dmguard::cli {

/// Entry point for the dmguard binary. Returns 0 on success, 1 on usage or
/// validation errors and 2 on runtime failures.
int run(int argc, const char* const* argv);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dmguard::cli
