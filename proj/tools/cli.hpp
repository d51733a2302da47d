#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sarrain::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the `sarrain` executable. Usage errors return 2,
/// data and I/O failures return 1 after printing a one-line JSON error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace sarrain::cli
