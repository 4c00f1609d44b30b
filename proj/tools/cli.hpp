#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qbmor::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_verification_failed = 2;

// Runs the driver on argv-style arguments (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// QBMOR_THREADS if set to a positive integer, else the hardware concurrency.
int thread_budget();

}  // namespace qbmor::cli
