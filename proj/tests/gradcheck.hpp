// SPDX-License-Identifier: Apache-2.0
//
// Gradient checking helpers shared by the unit and acceptance suites.
// Autodiff gradients are compared against central finite differences of the
// pure forward evaluation; the relative-error denominator is floored so that
// near-zero gradients are judged on absolute error.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mcan/network.hpp"
#include "mcan/objective.hpp"
#include "mcan/tensor.hpp"

namespace gradcheck {

// The denominator floor turns the check into an absolute gate of
// floor * tolerance for near-zero gradients; 1e-3 puts that gate at 1e-8,
// an order of magnitude above the central-difference evaluation noise
// observed on the composite objective while still far below the error any
// incorrect backward rule would produce.
inline double rel_err(double a, double b, double floor = 1e-3) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

// Worst relative error between autodiff and finite differences for a scalar
// function of one tensor.
inline double check_tensor(const std::function<mcan::Tensor(const mcan::Tensor&)>& op,
                           const mcan::Tensor& input, double eps = 1e-4) {
    using namespace mcan;
    Tensor t = Tensor::from_values(input.shape(),
                                   {input.values().begin(), input.values().end()});
    t.set_requires_grad(true);
    Tape tape;
    {
        TapeScope scope(tape);
        Tensor loss = reduce_sum(op(t));
        tape.backward(loss);
    }
    const auto fd = finite_diff_grad(
        [&](const Tensor& v) { return reduce_sum(op(v)).item(); }, t, eps);
    const auto ad = t.grad();
    double worst = 0.0;
    for (size_t i = 0; i < fd.size(); ++i) worst = std::max(worst, rel_err(ad[i], fd[i]));
    return worst;
}

struct ParamGradReport {
    std::string worst_param;
    double worst_rel_err = 0.0;
    int64_t params_checked = 0;
};

// Full composite-objective gradient check over every network parameter.
inline ParamGradReport check_objective_grads(mcan::MultiAttrNet& net,
                                             const mcan::Batch& batch,
                                             const mcan::LossWeights& weights,
                                             double eps = 1e-4) {
    using namespace mcan;
    auto params = net.named_parameters();
    for (auto& [name, p] : params) p.zero_grad();
    Tape tape;
    {
        TapeScope scope(tape);
        LossBreakdown out = total_loss(net, batch, weights);
        tape.backward(out.total);
    }
    ParamGradReport report;
    for (auto& [name, p] : params) {
        const auto fd = finite_diff_grad(
            [&](const Tensor& t) {
                auto& pv = p.raw_values();
                const std::vector<double> saved = pv;
                std::copy(t.values().begin(), t.values().end(), pv.begin());
                const double v = total_loss(net, batch, weights).total_value;
                pv = saved;
                return v;
            },
            p, eps);
        const auto ad = p.grad();
        for (size_t i = 0; i < fd.size(); ++i) {
            const double e = rel_err(ad.empty() ? 0.0 : ad[i], fd[i]);
            if (e > report.worst_rel_err) {
                report.worst_rel_err = e;
                report.worst_param = name + "[" + std::to_string(i) + "]";
            }
        }
        report.params_checked += (int64_t)fd.size();
    }
    return report;
}

// Central finite differences are only valid when no relu input crosses its
// kink inside the perturbation radius. Backward rules can be checked at any
// point in parameter space, so move to one with wide kink margins: shrink
// the kernels (damping activation magnitudes) and push conv biases to
// alternating +/-0.75 so each channel sits firmly on one relu branch while
// both branches stay exercised.
inline void prepare_gradcheck_point(mcan::MultiAttrNet& net) {
    for (auto& [name, p] : net.named_parameters()) {
        if (name.ends_with(".kernel")) {
            for (auto& v : p.raw_values()) v *= 0.25;
        } else if (name.ends_with(".bias") && p.shape().size() == 1 &&
                   name.find(".fc") == std::string::npos &&
                   name.find("multilabel") == std::string::npos) {
            auto& vals = p.raw_values();
            for (size_t c = 0; c < vals.size(); ++c) vals[c] = (c % 2 == 0) ? 0.75 : -0.75;
        }
    }
}

// Returns the smallest |pre-relu| value over the mirrored forward pass, so
// tests can assert the finite-difference validity precondition explicitly.
inline double min_kink_margin(const mcan::MultiAttrNet& net, const mcan::Batch& batch) {
    using namespace mcan;
    std::map<std::string, Tensor> p;
    for (const auto& [name, t] : net.named_parameters()) p.emplace(name, t);
    auto conv = [&](const Tensor& in, const std::string& base, int stride, int dil, int pad) {
        return conv2d(in, p.at(base + ".kernel"), p.at(base + ".bias"), stride, dil, pad);
    };
    double margin = 1e300;
    auto track = [&](const Tensor& pre) {
        for (double v : pre.values()) margin = std::min(margin, std::fabs(v));
        return relu(pre);
    };

    Tensor t = track(conv(batch.images, "extractor.stem", 2, 1, 1));
    t = track(conv(t, "extractor.block1", 1, 1, 1));
    t = track(conv(t, "extractor.block2", 1, 2, 2));
    const Tensor feat = track(conv(t, "extractor.block3", 1, 4, 4));

    for (int k = 0; k < net.config().num_attributes; ++k) {
        const std::string mg = "maskgen" + std::to_string(k);
        Tensor m = track(conv(feat, mg + ".c1", 1, 1, 1));
        m = track(conv(m, mg + ".c2", 1, 1, 1));
        const Tensor mask = sigmoid(conv(m, mg + ".c3", 1, 1, 0));
        const Tensor masked = mul(add_scalar(mask, 1.0), feat);
        track(conv(masked, "binhead" + std::to_string(k) + ".conv", 1, 1, 1));
    }
    if (net.config().enable_reconstructor) {
        track(conv(feat, "recon.narrow", 1, 1, 0));
    }
    return margin;
}

}  // namespace gradcheck
