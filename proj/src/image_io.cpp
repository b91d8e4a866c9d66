// SPDX-License-Identifier: Apache-2.0

#include "mcan/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "mcan/errors.hpp"

namespace mcan {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in, const std::filesystem::path& path) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back((char)c);
    }
    if (tok.empty()) throw FormatError("truncated header in " + path.string());
    return tok;
}

int parse_int(const std::string& tok, const std::filesystem::path& path) {
    try {
        size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw FormatError("bad header value in " + path.string());
        return v;
    } catch (const FormatError&) {
        throw;
    } catch (...) {
        throw FormatError("bad header value '" + tok + "' in " + path.string());
    }
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image file " + path.string());

    const std::string magic = next_token(in, path);
    int channels = 0;
    if (magic == "P5") {
        channels = 1;
    } else if (magic == "P6") {
        channels = 3;
    } else {
        throw FormatError("unsupported image magic '" + magic + "' in " + path.string());
    }
    const int width = parse_int(next_token(in, path), path);
    const int height = parse_int(next_token(in, path), path);
    const int maxval = parse_int(next_token(in, path), path);
    if (width <= 0 || height <= 0) throw FormatError("bad dimensions in " + path.string());
    if (maxval != 255) throw FormatError("only maxval 255 supported: " + path.string());
    // next_token consumed the single whitespace after maxval; pixel data is next

    const size_t n = (size_t)channels * height * width;
    std::vector<uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), (std::streamsize)n);
    if ((size_t)in.gcount() != n) throw FormatError("truncated pixel data in " + path.string());

    Image img;
    img.channels = channels;
    img.height = height;
    img.width = width;
    img.values.resize(n);
    // interleaved RGB -> planar [C,H,W]
    if (channels == 1) {
        for (size_t i = 0; i < n; ++i) img.values[i] = raw[i] / 255.0;
    } else {
        const size_t plane = (size_t)height * width;
        for (size_t i = 0; i < plane; ++i) {
            for (int c = 0; c < 3; ++c) img.values[c * plane + i] = raw[i * 3 + c] / 255.0;
        }
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, std::span<const double> values, int height,
               int width) {
    if ((int64_t)values.size() != (int64_t)height * width) {
        throw ShapeError("pgm payload size does not match dimensions");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image file " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    std::vector<uint8_t> raw(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        const double v = std::clamp(values[i], 0.0, 1.0);
        raw[i] = (uint8_t)std::lround(v * 255.0);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), (std::streamsize)raw.size());
    if (!out) throw IoError("short write to " + path.string());
}

Image resize_bilinear(const Image& image, int out_height, int out_width) {
    if (out_height <= 0 || out_width <= 0) throw ValueError("resize target must be positive");
    if (image.height == out_height && image.width == out_width) return image;

    Image out;
    out.channels = image.channels;
    out.height = out_height;
    out.width = out_width;
    out.values.resize((size_t)image.channels * out_height * out_width);

    const double sy = (double)image.height / out_height;
    const double sx = (double)image.width / out_width;
    for (int c = 0; c < image.channels; ++c) {
        const double* src = image.values.data() + (size_t)c * image.height * image.width;
        double* dst = out.values.data() + (size_t)c * out_height * out_width;
        for (int y = 0; y < out_height; ++y) {
            const double fy = (y + 0.5) * sy - 0.5;
            const int y0 = std::clamp((int)std::floor(fy), 0, image.height - 1);
            const int y1 = std::min(y0 + 1, image.height - 1);
            const double wy = std::clamp(fy - y0, 0.0, 1.0);
            for (int x = 0; x < out_width; ++x) {
                const double fx = (x + 0.5) * sx - 0.5;
                const int x0 = std::clamp((int)std::floor(fx), 0, image.width - 1);
                const int x1 = std::min(x0 + 1, image.width - 1);
                const double wx = std::clamp(fx - x0, 0.0, 1.0);
                const double top = src[y0 * image.width + x0] * (1.0 - wx) +
                                   src[y0 * image.width + x1] * wx;
                const double bot = src[y1 * image.width + x0] * (1.0 - wx) +
                                   src[y1 * image.width + x1] * wx;
                dst[y * out_width + x] = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

Image convert_channels(const Image& image, int channels) {
    if (image.channels == channels) return image;
    const size_t plane = (size_t)image.height * image.width;
    Image out;
    out.channels = channels;
    out.height = image.height;
    out.width = image.width;
    out.values.resize(plane * channels);
    if (image.channels == 3 && channels == 1) {
        for (size_t i = 0; i < plane; ++i) {
            out.values[i] = 0.299 * image.values[i] + 0.587 * image.values[plane + i] +
                            0.114 * image.values[2 * plane + i];
        }
    } else if (image.channels == 1 && channels == 3) {
        for (int c = 0; c < 3; ++c) {
            std::copy(image.values.begin(), image.values.end(),
                      out.values.begin() + (size_t)c * plane);
        }
    } else {
        throw ValueError("unsupported channel conversion " +
                         std::to_string(image.channels) + " -> " + std::to_string(channels));
    }
    return out;
}

}  // namespace mcan
