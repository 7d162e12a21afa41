#pragma once

#include <string>
#include <vector>

namespace pktm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitRuntime = 4;

// Entry point behind the `pktm` executable. args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace pktm::cli
