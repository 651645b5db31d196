// runner.hpp - Executes a validated scenario and writes its data products.

#pragma once

#include "cvdyn/config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cvdyn::runner {

struct RunOutput {
    std::vector<std::filesystem::path> files;  // CSV files in job order
    std::filesystem::path manifest;            // manifest.json
};

/// Runs every job of `cfg` on up to `jobs` worker threads. Each job writes
/// its own CSV; the manifest is written last. The first failing job (in job
/// order) is rethrown after all workers finish.
RunOutput run(const config::ScenarioConfig& cfg, const std::filesystem::path& out_dir, unsigned jobs = 1);

/// --out, then the CVDYN_OUTPUT_DIR value, then the config's output.dir.
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag, const char* env,
                                         const config::ScenarioConfig& cfg);

}  // namespace cvdyn::runner
