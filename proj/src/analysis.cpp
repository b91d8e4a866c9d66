// SPDX-License-Identifier: Apache-2.0

#include "mcan/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "mcan/errors.hpp"
#include "mcan/image_io.hpp"
#include "mcan/text_util.hpp"

namespace mcan {

namespace {

constexpr int kEvalBatch = 64;

std::vector<std::vector<int>> batch_indices(int n, int batch) {
    std::vector<std::vector<int>> out;
    for (int start = 0; start < n; start += batch) {
        std::vector<int> idx;
        for (int i = start; i < std::min(n, start + batch); ++i) idx.push_back(i);
        out.push_back(std::move(idx));
    }
    return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= (double)n;
    mb /= (double)n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;  // zero-variance convention
    return cov / std::sqrt(va * vb);
}

CorrelationMatrix correlation_of(const std::vector<std::vector<double>>& observations,
                                 std::vector<std::string> labels) {
    CorrelationMatrix m;
    m.labels = std::move(labels);
    const int dim = (int)m.labels.size();
    m.values.assign((size_t)dim * dim, 0.0);
    for (int r = 0; r < dim; ++r) {
        m.values[(size_t)r * dim + r] = 1.0;
        for (int c = r + 1; c < dim; ++c) {
            const double v = pearson(observations[r], observations[c]);
            m.values[(size_t)r * dim + c] = v;
            m.values[(size_t)c * dim + r] = v;
        }
    }
    for (int r = 0; r < dim; ++r) {
        std::vector<int> order;
        for (int c = 0; c < dim; ++c) {
            if (c != r) order.push_back(c);
        }
        std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
            if (m.at(r, x) != m.at(r, y)) return m.at(r, x) > m.at(r, y);
            return x < y;
        });
        std::vector<std::string> top;
        for (int i = 0; i < (int)order.size() && i < 5; ++i) top.push_back(m.labels[order[i]]);
        m.top5.push_back(std::move(top));
    }
    return m;
}

// Per-sample per-channel spatial means of attribute k's mask over all
// samples, in sample order. Shape: [samples][C].
std::vector<std::vector<double>> mask_channel_means(const MultiAttrNet& net,
                                                    const std::vector<Sample>& samples,
                                                    int k) {
    const int channels = net.config().feature_channels;
    std::vector<std::vector<double>> means;
    means.reserve(samples.size());
    for (const auto& idx : batch_indices((int)samples.size(), kEvalBatch)) {
        const Tensor feat = net.extract_features(stack_images(samples, idx));
        const Tensor mask = net.generate_mask(k, feat);
        const int hw = mask.shape()[2] * mask.shape()[3];
        for (size_t i = 0; i < idx.size(); ++i) {
            std::vector<double> per_channel(channels, 0.0);
            for (int c = 0; c < channels; ++c) {
                const double* plane =
                    mask.values().data() + ((int64_t)i * channels + c) * hw;
                double sum = 0.0;
                for (int p = 0; p < hw; ++p) sum += plane[p];
                per_channel[c] = sum / (double)hw;
            }
            means.push_back(std::move(per_channel));
        }
    }
    return means;
}

}  // namespace

ImportanceVector channel_importance(const MultiAttrNet& net,
                                    const std::vector<Sample>& samples, int k) {
    if (samples.empty()) throw ValueError("channel_importance needs a nonempty sample set");
    const auto means = mask_channel_means(net, samples, k);
    ImportanceVector out;
    out.attribute = k;
    out.scores.assign(net.config().feature_channels, 0.0);
    for (const auto& per_channel : means) {
        for (size_t c = 0; c < per_channel.size(); ++c) out.scores[c] += per_channel[c];
    }
    for (double& s : out.scores) s /= (double)means.size();
    return out;
}

std::vector<int> top_k_channels(const ImportanceVector& importance, int k_top) {
    if (k_top < 1 || k_top > (int)importance.scores.size()) {
        throw ValueError("k_top out of range");
    }
    std::vector<int> order(importance.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (importance.scores[a] != importance.scores[b]) {
            return importance.scores[a] > importance.scores[b];
        }
        return a < b;
    });
    order.resize(k_top);
    return order;
}

CorrelationMatrix feature_correlation(const MultiAttrNet& net,
                                      const std::vector<Sample>& samples) {
    if (samples.size() < 2) throw ValueError("feature_correlation needs >= 2 samples");
    const int channels = net.config().feature_channels;
    // observation vector per channel: spatial-mean activation for every
    // (sample, attribute) pair
    std::vector<std::vector<double>> obs(channels);
    for (int k = 0; k < net.num_attributes(); ++k) {
        const auto means = mask_channel_means(net, samples, k);
        for (const auto& per_channel : means) {
            for (int c = 0; c < channels; ++c) obs[c].push_back(per_channel[c]);
        }
    }
    std::vector<std::string> labels;
    for (int c = 0; c < channels; ++c) labels.push_back(std::to_string(c));
    return correlation_of(obs, std::move(labels));
}

CorrelationMatrix attribute_correlation(const MultiAttrNet& net,
                                        const std::vector<Sample>& samples,
                                        const std::vector<std::string>& attribute_names) {
    if (samples.size() < 2) throw ValueError("attribute_correlation needs >= 2 samples");
    if (net.num_attributes() < 2) throw ValueError("attribute_correlation needs >= 2 attributes");
    if ((int)attribute_names.size() != net.num_attributes()) {
        throw ValueError("attribute name count does not match the network");
    }
    std::vector<std::vector<double>> obs;
    for (int k = 0; k < net.num_attributes(); ++k) {
        obs.push_back(channel_importance(net, samples, k).scores);
    }
    return correlation_of(obs, attribute_names);
}

int export_masks(const MultiAttrNet& net, const Sample& sample, int k,
                 const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const Shape& is = sample.image.shape();
    const Tensor image = reshape(sample.image, {1, is[0], is[1], is[2]});
    const Tensor mask = net.generate_mask(k, net.extract_features(image));
    const int channels = mask.shape()[1], mh = mask.shape()[2], mw = mask.shape()[3];
    const int scale = is[1] / mh;

    nlohmann::json index = nlohmann::json::array();
    for (int c = 0; c < channels; ++c) {
        const double* plane = mask.values().data() + (int64_t)c * mh * mw;
        const auto [lo_it, hi_it] = std::minmax_element(plane, plane + mh * mw);
        const double lo = *lo_it, hi = *hi_it;
        std::vector<double> img((size_t)is[1] * is[2]);
        for (int y = 0; y < is[1]; ++y) {
            for (int x = 0; x < is[2]; ++x) {
                const double v = plane[(y / scale) * mw + (x / scale)];
                img[(size_t)y * is[2] + x] = hi > lo ? (v - lo) / (hi - lo) : 0.5;
            }
        }
        char name[64];
        std::snprintf(name, sizeof name, "attr%d_ch%d.pgm", k, c);
        write_pgm(out_dir / name, img, is[1], is[2]);
        index.push_back({{"channel", c}, {"min", lo}, {"max", hi}});
    }
    std::ofstream side(out_dir / ("attr" + std::to_string(k) + "_index.json"));
    if (!side) throw IoError("cannot write mask index for attribute " + std::to_string(k));
    side << index.dump(2) << "\n";
    return channels;
}

double localization_score(const MultiAttrNet& net, const std::vector<Sample>& samples,
                          int k) {
    std::vector<int> positives;
    for (size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].has_supports()) {
            throw ValueError("localization_score needs samples with support bitmaps");
        }
        if (samples[i].labels.at(k) == 1.0) positives.push_back((int)i);
    }
    if (positives.empty()) {
        throw ValueError("no positive samples for attribute " + std::to_string(k));
    }

    double in_sum = 0.0, out_sum = 0.0;
    int64_t in_count = 0, out_count = 0;
    for (const auto& idx : batch_indices((int)positives.size(), kEvalBatch)) {
        std::vector<int> sample_idx;
        for (int i : idx) sample_idx.push_back(positives[i]);
        const Tensor feat = net.extract_features(stack_images(samples, sample_idx));
        const Tensor mask = net.generate_mask(k, feat);
        const int channels = mask.shape()[1], mh = mask.shape()[2], mw = mask.shape()[3];
        const int size = samples[sample_idx[0]].image.shape()[1];
        const int scale = size / mh;
        for (size_t i = 0; i < sample_idx.size(); ++i) {
            const auto& support = samples[sample_idx[i]].supports[k];
            for (int y = 0; y < size; ++y) {
                for (int x = 0; x < size; ++x) {
                    const int64_t at = ((int64_t)i * channels) * mh * mw +
                                       (y / scale) * mw + (x / scale);
                    double best = 0.0;
                    for (int c = 0; c < channels; ++c) {
                        best = std::max(best, mask.values()[at + (int64_t)c * mh * mw]);
                    }
                    if (support[(size_t)y * size + x]) {
                        in_sum += best;
                        ++in_count;
                    } else {
                        out_sum += best;
                        ++out_count;
                    }
                }
            }
        }
    }
    if (in_count == 0) throw ValueError("empty supports for attribute " + std::to_string(k));
    const double mean_in = in_sum / (double)in_count;
    if (out_count == 0) return 1e6;
    const double mean_out = out_sum / (double)out_count;
    if (mean_out == 0.0) return 1e6;
    return std::min(mean_in / mean_out, 1e6);
}

void write_importance_csv(const std::vector<ImportanceVector>& importances,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "attribute,channel,score\n";
    for (const auto& imp : importances) {
        const auto order = top_k_channels(imp, (int)imp.scores.size());
        for (int c : order) {
            out << imp.attribute << ',' << c << ',' << format_double(imp.scores[c]) << '\n';
        }
    }
    if (!out) throw IoError("short write to " + path.string());
}

void write_correlation_json(const CorrelationMatrix& matrix,
                            const std::filesystem::path& path) {
    nlohmann::json j;
    j["labels"] = matrix.labels;
    j["matrix"] = matrix.values;
    nlohmann::json top5;
    for (size_t r = 0; r < matrix.labels.size(); ++r) top5[matrix.labels[r]] = matrix.top5[r];
    j["top5"] = std::move(top5);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_correlation_csv(const CorrelationMatrix& matrix,
                           const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "row,col,value\n";
    for (int r = 0; r < matrix.dim(); ++r) {
        for (int c = 0; c < matrix.dim(); ++c) {
            out << matrix.labels[r] << ',' << matrix.labels[c] << ','
                << format_double(matrix.at(r, c)) << '\n';
        }
    }
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace mcan
