#pragma once

#include "carleman/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace carleman {

enum ExitCode : int { kExitSuccess = 0, kExitError = 1, kExitVerificationFailed = 2 };

struct RunOutcome {
    int exit_code = kExitSuccess;
    std::string summary;  // one line, starts with PASS or FAIL
    std::vector<std::filesystem::path> artifacts;
};

/// Worker count from CARLEMAN_WORKERS (default 1).
int workers_from_environment();

/// Executes the configured command and writes its artifacts. Module errors
/// propagate as exceptions.
RunOutcome run(const RunConfig& config);

/// Loads, runs and reports: prints the summary to `out` and errors to `err`,
/// returns the process exit code.
int run_main(const std::filesystem::path& config_path, const std::vector<std::string>& overrides,
             std::ostream& out, std::ostream& err);

}  // namespace carleman
