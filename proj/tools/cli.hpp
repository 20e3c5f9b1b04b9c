#pragma once

#include <iosfwd>

namespace kmf {

/// Entry point of the `kmf` tool. Data goes to `out`, diagnostics to `err`.
/// Returns 0 on success, 1 on a user error, 2 on an internal error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kmf
