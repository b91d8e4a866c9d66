// SPDX-License-Identifier: Apache-2.0
//
// Composite training objective: summed per-attribute binary cross entropy on
// masked features, the same BCE form for the auxiliary multi-label head,
// squared-error image reconstruction, and an L1 sparsity penalty on the
// attention masks, combined as
//     L = lambda_b*L_b + lambda_m*L_m + lambda_r*L_r + lambda_1*|M|_1.

#pragma once

#include <vector>

#include "mcan/network.hpp"
#include "mcan/tensor.hpp"

namespace mcan {

struct LossWeights {
    double lambda_b = 1.0;
    double lambda_m = 1.0;
    double lambda_r = 4.0;
    double lambda_1 = 1e-5;

    void validate() const;
};

// The |M|_1 element reduction is not uniquely pinned down by the formula;
// `sum` (the default) sums over every mask element and attribute, `mean`
// divides that by the total element count. Both are batch-averaged.
enum class L1Reduction { sum, mean };

struct LossBreakdown {
    double l_b = 0.0;
    double l_m = 0.0;
    double l_r = 0.0;
    double l_mask_l1 = 0.0;
    double total_value = 0.0;
    Tensor total;  // differentiable scalar; the tape root for backward
};

struct Batch {
    Tensor images;  // [B, Cimg, S, S], values in [0,1]
    Tensor labels;  // [B, K], values in {0,1}
};

// Mean over samples of the per-sample sum over attributes of binary cross
// entropy; probabilities are clamped to [1e-7, 1 - 1e-7] before the logs.
Tensor binary_attr_loss(const Tensor& probs, const Tensor& labels);

// Identical formula applied to the multi-label head's predictions.
Tensor multilabel_loss(const Tensor& probs, const Tensor& labels);

// Batch mean of the per-sample squared error summed over all pixels.
Tensor reconstruction_loss(const Tensor& x, const Tensor& x_hat);

// Mask values are sigmoid outputs (positive), so |M| is M itself.
Tensor mask_l1(const std::vector<Tensor>& masks, L1Reduction reduction = L1Reduction::sum);

// Full training-mode forward (multiplier 1 + M) and weighted combination.
// Components disabled in the net's config contribute exactly 0 and build no
// graph. Works with or without an open tape.
LossBreakdown total_loss(const MultiAttrNet& net, const Batch& batch, const LossWeights& w,
                         L1Reduction l1_reduction = L1Reduction::sum);

}  // namespace mcan
