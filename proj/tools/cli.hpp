#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace motlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // invalid config, missing path, failed check
inline constexpr int kExitUsage = 2;

/// args[0] is the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace motlab::cli
