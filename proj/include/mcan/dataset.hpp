// SPDX-License-Identifier: Apache-2.0
//
// Synthetic multi-attribute image data with exact ground-truth support
// bitmaps, plus ingestion of the external attribute-list format:
//   line 1: sample count
//   line 2: attribute names
//   rows:   <image file> then +1/-1 per attribute
// Supports mark exactly the pixels an attribute modified, computed by
// re-rendering the sample with that attribute switched off and diffing.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcan/tensor.hpp"

namespace mcan {

struct Sample {
    Tensor image;                // [Cimg, S, S], values in [0,1]
    std::vector<double> labels;  // K entries in {0,1}
    // K bitmaps of S*S bytes each, or empty when ground truth is unavailable
    // (externally loaded data).
    std::vector<std::vector<uint8_t>> supports;

    bool has_supports() const { return !supports.empty(); }
};

struct DatasetSpec {
    int num_samples = 2500;
    int image_size = 32;
    std::vector<std::string> attribute_names = {"circle",     "square",    "cross",
                                                "bright_top", "dark_left", "large_object"};
    uint64_t seed = 7;

    void validate() const;
};

// Deterministic for a given seed. The six default attributes: three shapes
// drawn in fixed regions (circle left, square right, cross centre, later
// shapes overdrawing earlier ones), a +0.3 top-half brightening, a -0.2
// left-half dimming, and "large_object" meaning the first present shape was
// drawn at its large size. Each underlying flag is an independent coin flip;
// large_object is 0 when no shape is present. `force_attribute_off`
// suppresses one attribute while consuming the identical random stream,
// which is how counterfactual supports are defined and tested.
std::vector<Sample> generate_synthetic(const DatasetSpec& spec,
                                       std::optional<int> force_attribute_off = std::nullopt);

// image + N(0, sigma^2) i.i.d. per element, clamped to [0,1]. sigma = 0
// returns the input values unchanged.
Tensor add_gaussian_noise(const Tensor& image, double sigma, uint64_t seed);

struct LoadedDataset {
    std::vector<Sample> samples;
    std::vector<std::string> attribute_names;
};

// Strict attribute-list ingestion: exactly the declared number of rows, +1/-1
// labels mapped to 1/0, images decoded, channel-converted, bilinearly resized
// and scaled to [0,1]. Supports are absent.
LoadedDataset load_celeba_format(const std::filesystem::path& attr_file,
                                 const std::filesystem::path& image_dir, int resize_to,
                                 int channels = 1);

// Seeded shuffle, then the first floor(n * train_fraction) samples train.
std::pair<std::vector<Sample>, std::vector<Sample>> split_dataset(std::vector<Sample> samples,
                                                                  double train_fraction,
                                                                  uint64_t seed);

// Writes img_#####.pgm files, attributes.txt in the ingestion format above,
// and supports.json (run-length encoded bitmaps + generator seed).
void export_dataset(const std::vector<Sample>& samples, const DatasetSpec& spec,
                    const std::filesystem::path& dir);

// Loads an exported directory; reattaches supports from supports.json when
// present and the geometry is unchanged.
LoadedDataset load_dataset_dir(const std::filesystem::path& dir, int resize_to,
                               int channels = 1);

// Stacks samples[indices] into a training batch ([B,C,S,S] images, [B,K]
// labels).
struct Batch;
Tensor stack_images(const std::vector<Sample>& samples, const std::vector<int>& indices);
Tensor stack_labels(const std::vector<Sample>& samples, const std::vector<int>& indices);

}  // namespace mcan
