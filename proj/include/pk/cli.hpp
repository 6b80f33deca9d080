#pragma once

// Command-line front end: parses arguments, runs one experiment and writes
// a CSV report plus a run manifest.

#include <iosfwd>
#include <string>
#include <vector>

namespace pk::cli {

inline constexpr const char* kVersion = "polykakeya 1.0.0";

/// Exit codes: 0 success, 2 parse or validation error, 3 stage failure.
/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pk::cli
