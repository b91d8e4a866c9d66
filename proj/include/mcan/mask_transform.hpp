// SPDX-License-Identifier: Apache-2.0
//
// Tone-curve style remapping of attention mask values at inference time.
// h bends [0,1] symmetrically about 0.5 with exponent n; g rescales h so the
// bottom of the curve can reach -beta, which lets the feature multiplier
// 1 + g suppress low-mask regions entirely. (n, beta) = (1, 0) is the
// identity configuration under which inference matches training exactly.

#pragma once

#include <utility>
#include <vector>

#include "mcan/tensor.hpp"

namespace mcan {

struct TransformParams {
    double n = 1.0;
    double beta = 0.0;

    bool is_identity() const { return n == 1.0 && beta == 0.0; }
    bool valid() const { return n >= 0.0 && beta >= 0.0 && beta <= 1.0; }
};

// Symmetric curve on [0,1]: (m/0.5)^n / 2 below 0.5, mirrored above.
// 0^0 is taken as 1, so h(., 0) is the constant 0.5.
double transform_h(double m, double n);

// g = (1 + beta) * h - beta; maps [0,1] into [-beta, 1].
double transform_g(double m, const TransformParams& params);

// Elementwise 1 + g over a mask tensor. Inference-only: never recorded on a
// tape. The identity configuration returns exactly 1 + mask.
Tensor transform_mask(const Tensor& mask, const TransformParams& params);

// count >= 2 evenly spaced (m, g(m)) pairs over [0,1] inclusive.
std::vector<std::pair<double, double>> curve_samples(const TransformParams& params, int count);

}  // namespace mcan
