#pragma once

// Operator entry point. Exit codes: 0 success, 1 validation or domain error,
// 2 usage error or unreadable input, 3 session failure.

#include <ostream>
#include <string>
#include <vector>

namespace spoofkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSessionFailed = 3;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spoofkit
