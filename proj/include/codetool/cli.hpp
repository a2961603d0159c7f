#pragma once

#include <ostream>

namespace codetool {

inline constexpr int kExitOk = 0;
inline constexpr int kExitTaskFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `codetool` binary: run, bench, repo, validate-toolbox.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace codetool
