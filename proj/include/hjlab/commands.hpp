#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hjlab/config.hpp"

namespace hjlab {

const std::vector<std::string>& command_names();

struct CommandOptions {
    std::filesystem::path out_dir;  // empty: [run] output from the config
    int workers = 1;
};

/// Runs one subcommand: writes `<out>/<name>.csv` plus `<out>/<name>.json`
/// (config echo, version, wall time, summary). Returns the exit code:
/// 0 success, 1 invariant violated, 2 configuration or precondition error.
int run_command(const std::string& command, const RunConfig& cfg, const CommandOptions& opts, std::ostream& log);

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace hjlab
