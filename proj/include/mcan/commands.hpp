// SPDX-License-Identifier: Apache-2.0
//
// The CLI subcommand bodies, callable in-process for tests. Every command
// writes the fully-resolved run_config.json into its output directory and
// never mutates its inputs. Failures are reported by exception; the CLI
// entry point maps them to exit codes.

#pragma once

#include <filesystem>
#include <vector>

#include "mcan/run_config.hpp"

namespace mcan::cli {

// Synthetic dataset -> PGM files + attributes.txt + supports.json.
void cmd_gen_data(const RunConfig& config, const std::filesystem::path& out_dir);

// Train on an exported dataset directory; writes model.mcan and trace.csv
// (one row per epoch; no wall-clock columns, so reruns are byte-identical).
void cmd_train(const RunConfig& config, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir);

// Accuracy under the configured mask transform -> accuracy.csv.
void cmd_eval(const RunConfig& config, const std::filesystem::path& checkpoint,
              const std::filesystem::path& data_dir, const std::filesystem::path& out_dir);

// Importance CSV, both correlation matrices (JSON + CSV), per-channel mask
// images for one sample, and localization scores when the dataset carries
// support bitmaps.
void cmd_analyze(const RunConfig& config, const std::filesystem::path& checkpoint,
                 const std::filesystem::path& data_dir,
                 const std::filesystem::path& out_dir);

// Noise-robustness sweep -> sweep.csv + summary.csv.
void cmd_sweep(const RunConfig& config, const std::filesystem::path& checkpoint,
               const std::filesystem::path& data_dir, const std::filesystem::path& out_dir);

// Transformation curve CSVs, one per (n, beta) pair, columns m,g.
void cmd_curve(const RunConfig& config, const std::vector<double>& ns,
               const std::vector<double>& betas, int count,
               const std::filesystem::path& out_dir);

}  // namespace mcan::cli
