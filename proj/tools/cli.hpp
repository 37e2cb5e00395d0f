#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sclood::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kDataError = 3;
inline constexpr int kNumericError = 4;

/// Runs `sclood <command> [flags]`. args excludes the program name.
/// Normal output goes to `out`, diagnostics to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sclood::cli
