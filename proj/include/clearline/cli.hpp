#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clearline::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kParseOrConfig = 2;
inline constexpr int kUnrecognizedTopic = 3;
inline constexpr int kBackendFailure = 4;

/// Runs one CLI invocation; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clearline::cli
