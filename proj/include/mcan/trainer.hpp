// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch optimization of the composite objective with seeded shuffling,
// ablation switches matching the network's optional components, and a
// checksummed binary checkpoint format that round-trips predictions bitwise.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mcan/dataset.hpp"
#include "mcan/network.hpp"
#include "mcan/objective.hpp"

namespace mcan {

enum class OptimizerKind { sgd, adam };
enum class Ablation { full, no_recon, no_multilabel, no_both };

std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);

struct TrainConfig {
    int epochs = 15;
    int batch_size = 32;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    LossWeights loss_weights;
    L1Reduction l1_reduction = L1Reduction::sum;
    Ablation ablation = Ablation::full;
    double clip_norm = 0.0;  // 0 disables global-norm gradient clipping
    uint64_t seed = 2;
    std::string checkpoint_path;  // empty: train() does not save

    void validate() const;

    // The component switches implied by the ablation choice.
    bool wants_reconstructor() const;
    bool wants_multilabel() const;
    // Applies those switches to a NetConfig.
    void apply_ablation(NetConfig& net_config) const;
};

struct EpochStats {
    double l_b = 0.0;
    double l_m = 0.0;
    double l_r = 0.0;
    double l_mask_l1 = 0.0;
    double total = 0.0;
    double holdout_accuracy = 0.0;  // mean attribute accuracy, identity transform
    double wall_seconds = 0.0;      // informational; never part of persisted outputs
};

struct TrainTrace {
    std::vector<EpochStats> epochs;
};

// param -= lr * grad, elementwise. No-op when no gradient has accumulated.
void sgd_step(Tensor& param, double lr);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
};

// Standard Adam update with bias correction; t is the 1-based step count.
void adam_step(Tensor& param, AdamState& state, double lr, double beta1, double beta2,
               double eps, int64_t t);

// Trains in place. Holdout accuracy is evaluated after every epoch with the
// identity transform; pass an empty holdout to skip (recorded as 0).
// Aborts with NumericError naming the first non-finite loss component.
TrainTrace train(MultiAttrNet& net, const std::vector<Sample>& train_data,
                 const std::vector<Sample>& holdout, const TrainConfig& config,
                 bool log_progress = false);

// Checkpoint file layout: magic "MCAN", then little-endian u32 format
// version, u32 header length, a JSON header (net config, train config, and a
// named parameter manifest with shapes and payload byte offsets), the
// float64 parameter payload in manifest order, and a CRC32 of all preceding
// bytes.
void save_checkpoint(const MultiAttrNet& net, const TrainConfig& config,
                     const std::filesystem::path& path);

struct Checkpoint {
    MultiAttrNet net;
    TrainConfig train_config;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mcan
