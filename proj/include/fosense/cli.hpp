#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fosense::cli {

// Exit statuses. Failures also print one stderr line
// `error: <category>: <message>`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
// Operation failures use kExitErrorBase + static_cast<int>(ErrorKind).
inline constexpr int kExitErrorBase = 10;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace fosense::cli
