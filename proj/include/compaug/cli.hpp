#pragma once

#include <iosfwd>

namespace compaug::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Entry point of the `compaug` tool. Subcommands: compose, classic, edges,
/// dataset-summary, evaluate, train-toy.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace compaug::cli
