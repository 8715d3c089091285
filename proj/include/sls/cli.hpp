#pragma once

#include <iosfwd>

namespace sls {

inline constexpr int exit_ok = 0;
inline constexpr int exit_input = 2;
inline constexpr int exit_internal = 3;
inline constexpr int exit_violation = 4;

// The command-line front end, with the streams injected so tests can drive it.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sls
