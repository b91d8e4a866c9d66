// SPDX-License-Identifier: Apache-2.0
//
// Noise-robustness protocol: corrupt the evaluation set with Gaussian noise
// of increasing strength and score every (n, beta) mask-transform cell on the
// byte-identical corrupted images, so cells are comparable at each sigma.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcan/dataset.hpp"
#include "mcan/mask_transform.hpp"
#include "mcan/network.hpp"

namespace mcan {

struct SweepSpec {
    std::vector<double> sigmas = {0.0,  0.05, 0.1,  0.15, 0.2,  0.25,
                                  0.3,  0.35, 0.4,  0.45, 0.5};
    std::vector<double> ns = {0.0, 1.0, 2.0, 3.0, 4.0};
    std::vector<double> betas = {0.0, 0.25, 0.5, 0.75, 1.0};
    int eval_samples = 500;
    uint64_t noise_seed = 3;
    double threshold = 0.5;

    // sigmas must be non-negative ascending and the identity cell (1, 0)
    // must be present as the baseline anchor.
    void validate() const;
};

// Fraction of correct predictions per attribute; prediction = probability >=
// threshold under the given mask transform. Per-sample results do not depend
// on batch composition, so this matches a one-sample-at-a-time evaluation
// bitwise.
std::vector<double> evaluate(const MultiAttrNet& net, const std::vector<Sample>& samples,
                             const TransformParams& transform, double threshold = 0.5);

double mean_accuracy(const std::vector<double>& per_attribute);

struct SweepRecord {
    double sigma = 0.0;
    double n = 1.0;
    double beta = 0.0;
    std::string attribute;  // attribute name or "__mean__"
    double accuracy = 0.0;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::vector<std::string> attribute_names;
};

// For each sigma: corrupt once (seed = noise_seed xor sigma index), then
// score every grid cell on that corrupted set. Features and masks are
// computed once per sigma and shared across cells; only the transform and
// binary heads rerun, which yields bitwise-identical results to independent
// evaluation of each cell.
SweepResult run_sweep(const MultiAttrNet& net, const std::vector<Sample>& clean_samples,
                      const SweepSpec& spec,
                      const std::vector<std::string>& attribute_names);

struct DeltaRow {
    double sigma = 0.0;
    double best_n = 1.0;
    double best_beta = 0.0;
    double best_acc = 0.0;
    double baseline_acc = 0.0;
    double delta = 0.0;  // best - baseline, >= 0 since the baseline is in the grid
};

// Grid-best mean accuracy against the identity cell per sigma; ties resolve
// toward (1, 0), then smaller n, then smaller beta.
std::vector<DeltaRow> baseline_delta(const SweepResult& result);

// CSV emission. Sweep: header sigma,n,beta,attribute,accuracy; summary:
// header sigma,best_n,best_beta,best_acc,baseline_acc,delta.
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);
void write_delta_csv(const std::vector<DeltaRow>& rows, const std::filesystem::path& path);

}  // namespace mcan
