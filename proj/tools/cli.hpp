#pragma once

#include <iosfwd>

namespace locpoly::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDegenerate = 3;

//! Runs one command line. Diagnostics go to err, regular output to out.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace locpoly::cli
