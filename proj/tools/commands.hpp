#pragma once

#include <string>
#include <vector>

#include "run_config.hpp"

namespace autm::cli {

/// Each command writes its artifacts under cfg.out_dir and returns an ExitCode.
int run_train(const RunConfig& cfg);
int run_density_grid(const RunConfig& cfg);
int run_sample(const RunConfig& cfg);
int run_invert_bench(const RunConfig& cfg);
int run_universality(const RunConfig& cfg);
int run_gradcheck(const RunConfig& cfg);
int run_roundtrip(const RunConfig& cfg);

/// manifest.json: command, argv, resolved options, seed and build versions.
void write_manifest(const RunConfig& cfg, const std::vector<std::string>& argv, const std::string& resolved);

}  // namespace autm::cli
