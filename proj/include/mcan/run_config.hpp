// SPDX-License-Identifier: Apache-2.0
//
// One resolved configuration object per CLI run: network, training, dataset
// and sweep settings plus the per-command options. Commands persist the
// fully-resolved form as run_config.json in their output directory, and any
// command accepts such a file back via --config, reproducing the run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mcan/config_json.hpp"
#include "mcan/dataset.hpp"
#include "mcan/network.hpp"
#include "mcan/robustness.hpp"
#include "mcan/trainer.hpp"

namespace mcan {

struct EvalOptions {
    double n = 1.0;
    double beta = 0.0;
    std::string split = "all";  // all | train | test
};

struct AnalyzeOptions {
    int sample_index = 0;
    int top_k = 3;
    std::string split = "all";
};

struct RunConfig {
    NetConfig net;
    TrainConfig train;
    DatasetSpec dataset;
    SweepSpec sweep;
    double train_fraction = 0.8;
    uint64_t split_seed = 4;
    std::string sweep_split = "test";
    EvalOptions eval;
    AnalyzeOptions analyze;
};

void to_json(nlohmann::json& j, const EvalOptions& o);
void from_json(const nlohmann::json& j, EvalOptions& o);
void to_json(nlohmann::json& j, const AnalyzeOptions& o);
void from_json(const nlohmann::json& j, AnalyzeOptions& o);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& config, const std::filesystem::path& path);

}  // namespace mcan
