// SPDX-License-Identifier: Apache-2.0
//
// Minimal binary PGM (P5) / PPM (P6) reading and writing, plus the resize
// and channel-conversion steps used when ingesting external images. Pixel
// values are doubles in [0,1]; files use maxval 255.

#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace mcan {

struct Image {
    int channels = 0;  // 1 (grayscale) or 3 (rgb)
    int height = 0;
    int width = 0;
    std::vector<double> values;  // [C,H,W] row-major, in [0,1]
};

// Reads a binary P5/P6 file; '#' comments in the header are allowed, maxval
// must be 255.
Image read_pnm(const std::filesystem::path& path);

// Writes a single-channel image as binary P5, values rounded to 0..255.
void write_pgm(const std::filesystem::path& path, std::span<const double> values, int height,
               int width);

// Bilinear resample with half-pixel centers: the source coordinate of output
// pixel i is (i + 0.5) * in/out - 0.5, with edge clamping. Applied per
// channel.
Image resize_bilinear(const Image& image, int out_height, int out_width);

// 3 -> 1 uses Rec.601 luma (0.299 R + 0.587 G + 0.114 B); 1 -> 3 replicates.
Image convert_channels(const Image& image, int channels);

}  // namespace mcan
