// SPDX-License-Identifier: Apache-2.0

#include "mcan/objective.hpp"

#include "mcan/errors.hpp"

namespace mcan {

namespace {

constexpr double kProbEps = 1e-7;

void check_binary_labels(const Tensor& labels) {
    for (double v : labels.values()) {
        if (v != 0.0 && v != 1.0) {
            throw ValueError("labels must be exactly 0 or 1, got " + std::to_string(v));
        }
    }
}

Tensor bce_sum_over_attrs_mean_over_batch(const Tensor& probs, const Tensor& labels) {
    if (probs.shape().size() != 2 || probs.shape() != labels.shape()) {
        throw ShapeError("BCE expects matching [B,K] probs and labels, got " +
                         shape_str(probs.shape()) + " and " + shape_str(labels.shape()));
    }
    check_binary_labels(labels);
    const int batch = probs.shape()[0];

    const Tensor p = clamp(probs, kProbEps, 1.0 - kProbEps);
    const Tensor one_minus_p = add_scalar(mul_scalar(p, -1.0), 1.0);
    const Tensor one_minus_y = add_scalar(mul_scalar(labels, -1.0), 1.0);
    const Tensor term = add(mul(log(p), labels), mul(log(one_minus_p), one_minus_y));
    return mul_scalar(reduce_sum(term), -1.0 / (double)batch);
}

}  // namespace

void LossWeights::validate() const {
    if (lambda_b < 0.0 || lambda_m < 0.0 || lambda_r < 0.0 || lambda_1 < 0.0) {
        throw ValueError("loss weights must be non-negative");
    }
}

Tensor binary_attr_loss(const Tensor& probs, const Tensor& labels) {
    return bce_sum_over_attrs_mean_over_batch(probs, labels);
}

Tensor multilabel_loss(const Tensor& probs, const Tensor& labels) {
    return bce_sum_over_attrs_mean_over_batch(probs, labels);
}

Tensor reconstruction_loss(const Tensor& x, const Tensor& x_hat) {
    if (x.shape() != x_hat.shape()) {
        throw ShapeError("reconstruction shapes differ: " + shape_str(x.shape()) + " vs " +
                         shape_str(x_hat.shape()));
    }
    const int batch = x.shape().empty() ? 1 : x.shape()[0];
    const Tensor diff = sub(x, x_hat);
    return mul_scalar(reduce_sum(mul(diff, diff)), 1.0 / (double)batch);
}

Tensor mask_l1(const std::vector<Tensor>& masks, L1Reduction reduction) {
    if (masks.empty()) throw ValueError("mask_l1 needs at least one mask");
    const int batch = masks.front().shape()[0];
    Tensor acc;
    int64_t elements_per_sample = 0;
    for (const auto& m : masks) {
        const Tensor s = reduce_sum(m);
        acc = acc.defined() ? add(acc, s) : s;
        elements_per_sample += m.size() / batch;
    }
    double scale = 1.0 / (double)batch;
    if (reduction == L1Reduction::mean) scale /= (double)elements_per_sample;
    return mul_scalar(acc, scale);
}

LossBreakdown total_loss(const MultiAttrNet& net, const Batch& batch, const LossWeights& w,
                         L1Reduction l1_reduction) {
    w.validate();
    const NetConfig& cfg = net.config();
    if (batch.labels.shape().size() != 2 ||
        batch.labels.shape()[1] != cfg.num_attributes ||
        batch.labels.shape()[0] != batch.images.shape()[0]) {
        throw ShapeError("labels must be [B," + std::to_string(cfg.num_attributes) +
                         "] matching the image batch, got " + shape_str(batch.labels.shape()));
    }

    const Tensor feat = net.extract_features(batch.images);

    std::vector<Tensor> masks;
    std::vector<Tensor> probs;
    masks.reserve(cfg.num_attributes);
    probs.reserve(cfg.num_attributes);
    for (int k = 0; k < cfg.num_attributes; ++k) {
        Tensor mask = net.generate_mask(k, feat);
        Tensor masked = mul(add_scalar(mask, 1.0), feat);
        probs.push_back(net.binary_head(k, masked));
        masks.push_back(std::move(mask));
    }

    LossBreakdown out;
    const Tensor l_b = binary_attr_loss(stack_columns(probs), batch.labels);
    out.l_b = l_b.item();
    Tensor total = mul_scalar(l_b, w.lambda_b);

    if (cfg.enable_multilabel) {
        const Tensor l_m = multilabel_loss(net.multilabel_head(feat), batch.labels);
        out.l_m = l_m.item();
        total = add(total, mul_scalar(l_m, w.lambda_m));
    }
    if (cfg.enable_reconstructor) {
        const Tensor l_r = reconstruction_loss(batch.images, net.reconstruct(feat));
        out.l_r = l_r.item();
        total = add(total, mul_scalar(l_r, w.lambda_r));
    }
    const Tensor l1 = mask_l1(masks, l1_reduction);
    out.l_mask_l1 = l1.item();
    total = add(total, mul_scalar(l1, w.lambda_1));

    out.total = total;
    out.total_value = total.item();
    return out;
}

}  // namespace mcan
