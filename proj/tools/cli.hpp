#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pmpb::cli {

// exit codes
inline constexpr int kOk = 0;
inline constexpr int kParseError = 1;
inline constexpr int kNotConverged = 2;
inline constexpr int kGeometryError = 3;

/// Runs `pmpb <args...>` (args excludes the program name). Tables go to `out`,
/// diagnostics and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a file's bytes.
std::string file_sha256(const std::string& path);

/// Applies PMPB_THREADS (if set and positive) as an upper bound on OpenMP threads.
void apply_thread_cap();

}  // namespace pmpb::cli
