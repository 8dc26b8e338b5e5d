#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hepsel::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_data = 2;

// Entry point for the `hepsel` tool. args[0] is the program name.
int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);
int run(int argc, const char * const * argv);

} // namespace hepsel::cli
