#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cascdc::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIngest = 3, kNumerical = 4 };

/// Runs one command line (argv[0] is the program name) and returns the exit
/// code. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace cascdc::cli
