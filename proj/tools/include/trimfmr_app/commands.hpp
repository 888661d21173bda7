#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "trimfmr_app/config.hpp"

namespace trimfmr::app {

inline constexpr const char* kVersion = "0.3.0";

struct RunResult {
    std::vector<std::string> outputs;  // file names relative to out_dir
    Json extra = Json::object();       // command-specific manifest fields
    int exit_code = 0;
};

RunResult cmd_fit(const RunConfig& cfg);
RunResult cmd_simulate(const RunConfig& cfg);
RunResult cmd_select_alpha(const RunConfig& cfg);
RunResult cmd_cv(const RunConfig& cfg);

/// Dispatches on cfg.command, then writes manifest.json into cfg.out_dir.
RunResult run_command(const RunConfig& cfg);

// Reads a manifest and returns its resolved config.
RunConfig config_from_manifest(const std::string& manifest_path);

// Maps exceptions onto the documented exit codes.
int exit_code_for(const std::exception& e);

}  // namespace trimfmr::app
