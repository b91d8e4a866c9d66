// SPDX-License-Identifier: Apache-2.0
//
// Interpretability suite over a frozen network: per-attribute channel
// importance (mean mask activation), Pearson correlation among feature
// channels and among attributes, per-channel mask image export, and a
// support-based localization score for data with ground-truth regions.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcan/dataset.hpp"
#include "mcan/network.hpp"

namespace mcan {

struct ImportanceVector {
    int attribute = 0;
    std::vector<double> scores;  // length C, mean mask activation per channel
};

struct CorrelationMatrix {
    std::vector<std::string> labels;
    std::vector<double> values;  // row-major, labels.size() squared
    // Per row: up to five other labels with the highest correlation,
    // descending, ties broken by ascending index.
    std::vector<std::vector<std::string>> top5;

    int dim() const { return (int)labels.size(); }
    double at(int r, int c) const { return values[(size_t)r * labels.size() + c]; }
};

// scores[c] = mean over samples and spatial positions of mask channel c.
ImportanceVector channel_importance(const MultiAttrNet& net,
                                    const std::vector<Sample>& samples, int k);

// Channel ids by descending score; ties broken by ascending channel id.
std::vector<int> top_k_channels(const ImportanceVector& importance, int k_top);

// Pearson correlation between channels; one observation per (sample,
// attribute) pair is the spatial mean of that mask channel. Zero-variance
// channels correlate 0 with others and 1 with themselves.
CorrelationMatrix feature_correlation(const MultiAttrNet& net,
                                      const std::vector<Sample>& samples);

// Pearson correlation between attributes' importance vectors (length-C
// observations per attribute).
CorrelationMatrix attribute_correlation(const MultiAttrNet& net,
                                        const std::vector<Sample>& samples,
                                        const std::vector<std::string>& attribute_names);

// Writes one PGM per channel (nearest-neighbour upsampled to the input
// resolution, min-max normalized per channel; constant channels map to
// mid-gray) plus a JSON index with each channel's pre-normalization range.
// Returns the number of images written.
int export_masks(const MultiAttrNet& net, const Sample& sample, int k,
                 const std::filesystem::path& out_dir);

// Ratio of mean channel-max mask activation (upsampled to image resolution)
// at support pixels to the mean elsewhere, pooled over positive samples.
// Capped at 1e6.
double localization_score(const MultiAttrNet& net, const std::vector<Sample>& samples, int k);

// CSV/JSON emission for the outputs above.
void write_importance_csv(const std::vector<ImportanceVector>& importances,
                          const std::filesystem::path& path);
void write_correlation_json(const CorrelationMatrix& matrix,
                            const std::filesystem::path& path);
void write_correlation_csv(const CorrelationMatrix& matrix,
                           const std::filesystem::path& path);

}  // namespace mcan
