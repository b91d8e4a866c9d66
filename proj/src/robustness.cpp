// SPDX-License-Identifier: Apache-2.0

#include "mcan/robustness.hpp"

#include <algorithm>
#include <fstream>

#include "mcan/errors.hpp"
#include "mcan/rng.hpp"
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

// Scores one corrupted/clean sample set for a list of transform cells,
// extracting features and masks once per batch and rerunning only the
// transform + head per cell. Returns per-cell per-attribute correct counts.
std::vector<std::vector<int64_t>> score_cells(const MultiAttrNet& net,
                                              const std::vector<Sample>& samples,
                                              const std::vector<TransformParams>& cells,
                                              double threshold) {
    const int k_attrs = net.num_attributes();
    std::vector<std::vector<int64_t>> correct(cells.size(),
                                              std::vector<int64_t>(k_attrs, 0));
    for (const auto& idx : batch_indices((int)samples.size(), kEvalBatch)) {
        const Tensor images = stack_images(samples, idx);
        const Tensor feat = net.extract_features(images);
        for (int k = 0; k < k_attrs; ++k) {
            const Tensor mask = net.generate_mask(k, feat);
            for (size_t c = 0; c < cells.size(); ++c) {
                const Tensor mult = cells[c].is_identity() ? add_scalar(mask, 1.0)
                                                           : transform_mask(mask, cells[c]);
                const Tensor prob = net.binary_head(k, mul(mult, feat));
                for (size_t i = 0; i < idx.size(); ++i) {
                    const bool predicted = prob.values()[i] >= threshold;
                    const bool actual = samples[idx[i]].labels.at(k) == 1.0;
                    if (predicted == actual) ++correct[c][k];
                }
            }
        }
    }
    return correct;
}

}  // namespace

void SweepSpec::validate() const {
    if (sigmas.empty() || ns.empty() || betas.empty()) {
        throw ValueError("sweep grids must be nonempty");
    }
    for (size_t i = 0; i < sigmas.size(); ++i) {
        if (sigmas[i] < 0.0) throw ValueError("sigmas must be non-negative");
        if (i > 0 && sigmas[i] <= sigmas[i - 1]) throw ValueError("sigmas must be ascending");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValueError("threshold must be in (0,1)");
    if (eval_samples < 1) throw ValueError("eval_samples must be >= 1");
    const bool has_baseline = std::count(ns.begin(), ns.end(), 1.0) > 0 &&
                              std::count(betas.begin(), betas.end(), 0.0) > 0;
    if (!has_baseline) throw ValueError("the (1, 0) baseline cell must be in the grid");
}

std::vector<double> evaluate(const MultiAttrNet& net, const std::vector<Sample>& samples,
                             const TransformParams& transform, double threshold) {
    if (samples.empty()) throw ValueError("evaluate needs a nonempty sample set");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValueError("threshold must be in (0,1)");
    const auto correct = score_cells(net, samples, {transform}, threshold);
    std::vector<double> acc(net.num_attributes());
    for (int k = 0; k < net.num_attributes(); ++k) {
        acc[k] = (double)correct[0][k] / (double)samples.size();
    }
    return acc;
}

double mean_accuracy(const std::vector<double>& per_attribute) {
    double sum = 0.0;
    for (double a : per_attribute) sum += a;
    return sum / (double)per_attribute.size();
}

SweepResult run_sweep(const MultiAttrNet& net, const std::vector<Sample>& clean_samples,
                      const SweepSpec& spec,
                      const std::vector<std::string>& attribute_names) {
    spec.validate();
    if (clean_samples.empty()) throw ValueError("run_sweep needs a nonempty sample set");
    if ((int)attribute_names.size() != net.num_attributes()) {
        throw ValueError("attribute name count does not match the network");
    }
    const int use_n = std::min((int)clean_samples.size(), spec.eval_samples);
    const std::vector<Sample> eval_set(clean_samples.begin(), clean_samples.begin() + use_n);

    std::vector<TransformParams> cells;
    for (double n : spec.ns) {
        for (double beta : spec.betas) cells.push_back({n, beta});
    }

    SweepResult result;
    result.attribute_names = attribute_names;
    for (size_t si = 0; si < spec.sigmas.size(); ++si) {
        const double sigma = spec.sigmas[si];
        // one corruption per sigma, shared byte-identically by all cells
        Rng noise_rng(spec.noise_seed ^ (uint64_t)si);
        std::vector<Sample> noisy = eval_set;
        for (auto& s : noisy) s.image = add_gaussian_noise(s.image, sigma, noise_rng.next_u64());

        const auto correct = score_cells(net, noisy, cells, spec.threshold);
        for (size_t c = 0; c < cells.size(); ++c) {
            double sum = 0.0;
            for (int k = 0; k < net.num_attributes(); ++k) {
                const double acc = (double)correct[c][k] / (double)use_n;
                sum += acc;
                result.records.push_back(
                    {sigma, cells[c].n, cells[c].beta, attribute_names[k], acc});
            }
            result.records.push_back({sigma, cells[c].n, cells[c].beta, "__mean__",
                                      sum / (double)net.num_attributes()});
        }
    }
    return result;
}

std::vector<DeltaRow> baseline_delta(const SweepResult& result) {
    // group mean rows by sigma, preserving record order
    std::vector<DeltaRow> rows;
    std::vector<double> sigmas;
    for (const auto& r : result.records) {
        if (r.attribute == "__mean__" &&
            std::count(sigmas.begin(), sigmas.end(), r.sigma) == 0) {
            sigmas.push_back(r.sigma);
        }
    }
    for (double sigma : sigmas) {
        DeltaRow row;
        row.sigma = sigma;
        bool have_baseline = false, have_best = false;
        for (const auto& r : result.records) {
            if (r.attribute != "__mean__" || r.sigma != sigma) continue;
            if (r.n == 1.0 && r.beta == 0.0) {
                row.baseline_acc = r.accuracy;
                have_baseline = true;
            }
            const bool better =
                !have_best || r.accuracy > row.best_acc ||
                (r.accuracy == row.best_acc &&
                 ((r.n == 1.0 && r.beta == 0.0) ||
                  (!(row.best_n == 1.0 && row.best_beta == 0.0) &&
                   (r.n < row.best_n || (r.n == row.best_n && r.beta < row.best_beta)))));
            if (better) {
                row.best_n = r.n;
                row.best_beta = r.beta;
                row.best_acc = r.accuracy;
                have_best = true;
            }
        }
        if (!have_baseline) {
            throw ValueError("baseline cell (1, 0) missing at sigma " + format_double(sigma));
        }
        row.delta = row.best_acc - row.baseline_acc;
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "sigma,n,beta,attribute,accuracy\n";
    for (const auto& r : result.records) {
        out << format_double(r.sigma) << ',' << format_double(r.n) << ','
            << format_double(r.beta) << ',' << r.attribute << ','
            << format_double(r.accuracy) << '\n';
    }
    if (!out) throw IoError("short write to " + path.string());
}

void write_delta_csv(const std::vector<DeltaRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "sigma,best_n,best_beta,best_acc,baseline_acc,delta\n";
    for (const auto& r : rows) {
        out << format_double(r.sigma) << ',' << format_double(r.best_n) << ','
            << format_double(r.best_beta) << ',' << format_double(r.best_acc) << ','
            << format_double(r.baseline_acc) << ',' << format_double(r.delta) << '\n';
    }
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace mcan
