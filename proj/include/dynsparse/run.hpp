#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "dynsparse/config.hpp"

namespace dynsparse {

inline constexpr const char* kVersion = "0.1.0";

/// Runs the subcommand and writes its files into config.out_dir, each
/// stamped with the hash of the manifest core (version, command, resolved
/// config). manifest.txt lists the body hash of every file. Returns the
/// written paths. Library errors propagate.
std::vector<std::filesystem::path> execute(const RunConfig& config, std::ostream& log);

/// Checks every file listed in dir/manifest.txt against the manifest.
/// Returns the number of files checked; throws VerificationError on a mismatch.
int verify_outputs(const std::filesystem::path& dir);

/// 0 success, 1 numerical, model, or verification failure, 2 usage or config error.
int exit_status_for(const std::exception& error);

/// Single-line JSON error record: {"error": {"type", "message", "exit_status"}}.
std::string error_record(const std::exception& error);

/// execute() with errors mapped to an exit status; the error record goes
/// to `err` and, when possible, to out_dir/error.json.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace dynsparse
