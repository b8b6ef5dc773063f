#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lannlab::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_not_converged = 3;
inline constexpr int exit_io = 4;

/// Version of every CSV layout the tool writes; stored in each manifest.
inline constexpr int csv_schema_version = 1;

/// Runs one command line (without the program name). Never throws; errors
/// are reported on `err` and mapped to the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lannlab::cli
