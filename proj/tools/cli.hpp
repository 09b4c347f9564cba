#ifndef RANGEFUSE_TOOLS_CLI_HPP
#define RANGEFUSE_TOOLS_CLI_HPP

#include <iosfwd>

namespace rangefuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point behind the rangefuse binary; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rangefuse::cli

#endif  // RANGEFUSE_TOOLS_CLI_HPP
