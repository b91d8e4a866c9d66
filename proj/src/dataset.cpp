// SPDX-License-Identifier: Apache-2.0

#include "mcan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mcan/errors.hpp"
#include "mcan/image_io.hpp"
#include "mcan/rng.hpp"

namespace mcan {

namespace {

enum Attr { kCircle = 0, kSquare = 1, kCross = 2, kBrightTop = 3, kDarkLeft = 4, kLarge = 5 };

struct ShapeDraw {
    int cx = 0, cy = 0;
    int r_small = 0, r_large = 0;
    double intensity = 0.0;
};

// All random draws for one sample, made unconditionally so a counterfactual
// re-render consumes the identical stream.
struct SampleDraw {
    double background = 0.0;
    bool flags[6] = {};
    ShapeDraw shapes[3];  // circle, square, cross
};

SampleDraw draw_sample(Rng& rng, int size) {
    SampleDraw d;
    d.background = rng.uniform(0.3, 0.5);
    for (bool& f : d.flags) f = rng.bernoulli(0.5);
    // per-shape horizontal bands keep every shape partially visible under
    // overdraw; vertical centres jitter freely. Intensity bands overlap but
    // differ by shape, a secondary cue alongside the shape pattern itself.
    const int cx_lo[3] = {8, 20, 13};
    const int cx_hi[3] = {11, 23, 18};
    const double int_lo[3] = {0.62, 0.70, 0.78};
    const double int_hi[3] = {0.78, 0.86, 0.94};
    for (int s = 0; s < 3; ++s) {
        d.shapes[s].cx = (int)rng.uniform_int(cx_lo[s], cx_hi[s]);
        d.shapes[s].cy = (int)rng.uniform_int(10, size - 11);
        d.shapes[s].r_small = (int)rng.uniform_int(4, 5);
        d.shapes[s].r_large = (int)rng.uniform_int(8, 10);
        d.shapes[s].intensity = rng.uniform(int_lo[s], int_hi[s]);
    }
    return d;
}

// The first present shape carries the size attribute.
int primary_shape(const bool flags[6]) {
    for (int s = 0; s < 3; ++s) {
        if (flags[s]) return s;
    }
    return -1;
}

std::vector<double> render(const SampleDraw& d, int size, int suppressed) {
    bool flags[6];
    std::copy(d.flags, d.flags + 6, flags);
    if (suppressed >= 0) flags[suppressed] = false;

    std::vector<double> img((size_t)size * size, d.background);
    const int primary = primary_shape(flags);
    for (int s = 0; s < 3; ++s) {
        if (!flags[s]) continue;
        const ShapeDraw& sh = d.shapes[s];
        const bool large = flags[kLarge] && s == primary;
        const int r = large ? sh.r_large : sh.r_small;
        for (int y = sh.cy - r; y <= sh.cy + r; ++y) {
            for (int x = sh.cx - r; x <= sh.cx + r; ++x) {
                if (y < 0 || y >= size || x < 0 || x >= size) continue;
                const int dx = x - sh.cx, dy = y - sh.cy;
                bool inside = false;
                if (s == kCircle) {
                    inside = dx * dx + dy * dy <= r * r;
                } else if (s == kSquare) {
                    inside = true;  // the loop bounds are the square
                } else {
                    inside = std::abs(dx) <= 1 || std::abs(dy) <= 1;  // plus sign
                }
                if (inside) img[(size_t)y * size + x] = sh.intensity;
            }
        }
    }
    if (flags[kBrightTop]) {
        for (int y = 0; y < size / 2; ++y) {
            for (int x = 0; x < size; ++x) img[(size_t)y * size + x] += 0.3;
        }
    }
    if (flags[kDarkLeft]) {
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size / 2; ++x) img[(size_t)y * size + x] -= 0.2;
        }
    }
    // bright shapes under the top-half boost can clip at 1; supports are
    // computed from rendered differences, so clipping stays consistent
    for (double& v : img) v = std::clamp(v, 0.0, 1.0);
    return img;
}

}  // namespace

void DatasetSpec::validate() const {
    if (num_samples < 1) throw ValueError("num_samples must be >= 1");
    if ((int)attribute_names.size() < 2) throw ValueError("need at least 2 attributes");
    if (image_size < 32) throw ValueError("synthetic images need image_size >= 32");
}

std::vector<Sample> generate_synthetic(const DatasetSpec& spec,
                                       std::optional<int> force_attribute_off) {
    spec.validate();
    if (spec.attribute_names.size() != 6) {
        throw ValueError("the synthetic generator defines exactly 6 attributes");
    }
    const int size = spec.image_size;
    Rng master(spec.seed);
    std::vector<Sample> out;
    out.reserve(spec.num_samples);

    for (int i = 0; i < spec.num_samples; ++i) {
        Rng rng(master.next_u64());
        const SampleDraw d = draw_sample(rng, size);
        const int suppressed = force_attribute_off.value_or(-1);
        const std::vector<double> base = render(d, size, suppressed);

        Sample s;
        s.image = Tensor::from_values({1, size, size}, base);
        s.labels.assign(6, 0.0);
        s.supports.assign(6, std::vector<uint8_t>((size_t)size * size, 0));
        for (int k = 0; k < 6; ++k) {
            if (k == suppressed) continue;
            const std::vector<double> without = render(d, size, k);
            bool any = false;
            for (size_t p = 0; p < base.size(); ++p) {
                if (base[p] != without[p]) {
                    s.supports[k][p] = 1;
                    any = true;
                }
            }
            s.labels[k] = any ? 1.0 : 0.0;
        }
        // construction guarantee: a flagged shape always keeps visible pixels
        for (int k = 0; k < 3; ++k) {
            if (k != suppressed && d.flags[k] && s.labels[k] != 1.0) {
                throw NumericError("synthetic shape fully occluded; generator bug");
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

Tensor add_gaussian_noise(const Tensor& image, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw ValueError("noise sigma must be >= 0");
    std::vector<double> v(image.values().begin(), image.values().end());
    if (sigma > 0.0) {
        Rng rng(seed);
        for (double& x : v) x = std::clamp(x + sigma * rng.gaussian(), 0.0, 1.0);
    }
    return Tensor::from_values(image.shape(), std::move(v));
}

LoadedDataset load_celeba_format(const std::filesystem::path& attr_file,
                                 const std::filesystem::path& image_dir, int resize_to,
                                 int channels) {
    std::ifstream in(attr_file);
    if (!in) throw IoError("cannot open attribute file " + attr_file.string());

    std::string line;
    if (!std::getline(in, line) || line.find_first_not_of(" \t\r") == std::string::npos) {
        throw ValueError("empty attribute file " + attr_file.string());
    }
    int declared = 0;
    try {
        declared = std::stoi(line);
    } catch (...) {
        throw FormatError("line 1: expected sample count, got '" + line + "'");
    }
    if (declared < 1) throw FormatError("line 1: sample count must be >= 1");

    if (!std::getline(in, line)) throw FormatError("line 2: missing attribute names");
    LoadedDataset out;
    {
        std::istringstream names(line);
        std::string name;
        while (names >> name) out.attribute_names.push_back(name);
    }
    if (out.attribute_names.empty()) throw FormatError("line 2: no attribute names");
    const int num_attrs = (int)out.attribute_names.size();

    out.samples.reserve(declared);
    for (int i = 0; i < declared; ++i) {
        const int line_no = i + 3;
        if (!std::getline(in, line)) {
            throw FormatError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(declared) + " rows, file ended after " +
                              std::to_string(i));
        }
        std::istringstream row(line);
        std::string filename;
        if (!(row >> filename)) {
            throw FormatError("line " + std::to_string(line_no) + ": missing image filename");
        }
        Sample s;
        s.labels.reserve(num_attrs);
        for (int k = 0; k < num_attrs; ++k) {
            int v = 0;
            if (!(row >> v) || (v != 1 && v != -1)) {
                throw FormatError("line " + std::to_string(line_no) + ": expected +-1 label " +
                                  std::to_string(k + 1) + " of " + std::to_string(num_attrs));
            }
            s.labels.push_back(v == 1 ? 1.0 : 0.0);
        }
        std::string extra;
        if (row >> extra) {
            throw FormatError("line " + std::to_string(line_no) + ": trailing token '" +
                              extra + "'");
        }
        Image img = read_pnm(image_dir / filename);
        img = convert_channels(img, channels);
        img = resize_bilinear(img, resize_to, resize_to);
        for (double& v : img.values) v = std::clamp(v, 0.0, 1.0);
        s.image = Tensor::from_values({channels, resize_to, resize_to}, std::move(img.values));
        out.samples.push_back(std::move(s));
    }
    // strict: no data rows may follow the declared count
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            throw FormatError("more rows than the declared sample count " +
                              std::to_string(declared));
        }
    }
    return out;
}

std::pair<std::vector<Sample>, std::vector<Sample>> split_dataset(std::vector<Sample> samples,
                                                                  double train_fraction,
                                                                  uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValueError("train_fraction must lie strictly between 0 and 1");
    }
    Rng rng(seed);
    rng.shuffle(samples);
    const size_t train_n = (size_t)std::floor((double)samples.size() * train_fraction);
    std::vector<Sample> train(samples.begin(), samples.begin() + train_n);
    std::vector<Sample> test(samples.begin() + train_n, samples.end());
    return {std::move(train), std::move(test)};
}

namespace {

std::string image_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%05d.pgm", index);
    return buf;
}

nlohmann::json rle_encode(const std::vector<uint8_t>& bitmap) {
    nlohmann::json runs = nlohmann::json::array();
    size_t i = 0;
    while (i < bitmap.size()) {
        if (bitmap[i]) {
            size_t start = i;
            while (i < bitmap.size() && bitmap[i]) ++i;
            runs.push_back({start, i - start});
        } else {
            ++i;
        }
    }
    return runs;
}

std::vector<uint8_t> rle_decode(const nlohmann::json& runs, size_t n) {
    std::vector<uint8_t> bitmap(n, 0);
    for (const auto& run : runs) {
        const size_t start = run.at(0).get<size_t>();
        const size_t len = run.at(1).get<size_t>();
        if (start + len > n) throw FormatError("support run exceeds bitmap size");
        std::fill(bitmap.begin() + start, bitmap.begin() + start + len, 1);
    }
    return bitmap;
}

}  // namespace

void export_dataset(const std::vector<Sample>& samples, const DatasetSpec& spec,
                    const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const int num_attrs = (int)spec.attribute_names.size();

    std::ofstream attrs(dir / "attributes.txt");
    if (!attrs) throw IoError("cannot write " + (dir / "attributes.txt").string());
    attrs << samples.size() << "\n";
    for (int k = 0; k < num_attrs; ++k) {
        attrs << spec.attribute_names[k] << (k + 1 < num_attrs ? ' ' : '\n');
    }

    nlohmann::json sidecar;
    sidecar["seed"] = spec.seed;
    sidecar["image_size"] = spec.image_size;
    sidecar["attribute_names"] = spec.attribute_names;
    nlohmann::json all_supports = nlohmann::json::array();

    for (size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        const std::string name = image_filename((int)i);
        write_pgm(dir / name, s.image.values(), spec.image_size, spec.image_size);
        attrs << name;
        for (double v : s.labels) attrs << ' ' << (v == 1.0 ? "1" : "-1");
        attrs << "\n";
        if (s.has_supports()) {
            nlohmann::json per_attr = nlohmann::json::array();
            for (const auto& bitmap : s.supports) per_attr.push_back(rle_encode(bitmap));
            all_supports.push_back(std::move(per_attr));
        }
    }
    if (!attrs) throw IoError("short write to attributes.txt");
    sidecar["supports"] = std::move(all_supports);

    std::ofstream side(dir / "supports.json");
    if (!side) throw IoError("cannot write " + (dir / "supports.json").string());
    side << sidecar.dump(2) << "\n";
}

LoadedDataset load_dataset_dir(const std::filesystem::path& dir, int resize_to, int channels) {
    LoadedDataset out = load_celeba_format(dir / "attributes.txt", dir, resize_to, channels);

    const auto sidecar_path = dir / "supports.json";
    if (!std::filesystem::exists(sidecar_path)) return out;
    std::ifstream side(sidecar_path);
    nlohmann::json sidecar;
    side >> sidecar;
    const int stored_size = sidecar.at("image_size").get<int>();
    // supports are pixel-aligned; drop them if the load changed the geometry
    if (stored_size != resize_to) return out;
    const auto& all = sidecar.at("supports");
    if (all.size() != out.samples.size()) return out;
    const size_t n = (size_t)stored_size * stored_size;
    for (size_t i = 0; i < out.samples.size(); ++i) {
        out.samples[i].supports.clear();
        for (const auto& runs : all[i]) {
            out.samples[i].supports.push_back(rle_decode(runs, n));
        }
    }
    return out;
}

Tensor stack_images(const std::vector<Sample>& samples, const std::vector<int>& indices) {
    if (indices.empty()) throw ValueError("cannot stack an empty batch");
    const Shape& s = samples.at(indices[0]).image.shape();
    std::vector<double> values;
    values.reserve(indices.size() * (size_t)shape_size(s));
    for (int idx : indices) {
        const auto v = samples.at(idx).image.values();
        values.insert(values.end(), v.begin(), v.end());
    }
    return Tensor::from_values({(int)indices.size(), s[0], s[1], s[2]}, std::move(values));
}

Tensor stack_labels(const std::vector<Sample>& samples, const std::vector<int>& indices) {
    if (indices.empty()) throw ValueError("cannot stack an empty batch");
    const int k = (int)samples.at(indices[0]).labels.size();
    std::vector<double> values;
    values.reserve(indices.size() * k);
    for (int idx : indices) {
        const auto& l = samples.at(idx).labels;
        values.insert(values.end(), l.begin(), l.end());
    }
    return Tensor::from_values({(int)indices.size(), k}, std::move(values));
}

}  // namespace mcan
