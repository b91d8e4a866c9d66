// SPDX-License-Identifier: Apache-2.0

#include "mcan/mask_transform.hpp"

#include <cmath>

#include "mcan/errors.hpp"

namespace mcan {

double transform_h(double m, double n) {
    if (!(m >= 0.0 && m <= 1.0)) {
        throw DomainError("mask value " + std::to_string(m) + " outside [0,1]");
    }
    if (n < 0.0) throw DomainError("transform exponent n must be >= 0");
    // std::pow(0,0) == 1, which makes h(., 0) constant at 0.5.
    if (m < 0.5) return std::pow(m / 0.5, n) / 2.0;
    return 1.0 - std::pow((1.0 - m) / 0.5, n) / 2.0;
}

double transform_g(double m, const TransformParams& params) {
    if (!params.valid()) throw DomainError("transform params out of range");
    return (1.0 + params.beta) * transform_h(m, params.n) - params.beta;
}

Tensor transform_mask(const Tensor& mask, const TransformParams& params) {
    if (!params.valid()) throw DomainError("transform params out of range");
    const auto vals = mask.values();
    std::vector<double> out(vals.size());
    if (params.is_identity()) {
        // Exactly the training-time multiplier, no curve evaluation.
        for (size_t i = 0; i < vals.size(); ++i) {
            if (!(vals[i] >= 0.0 && vals[i] <= 1.0)) {
                throw DomainError("mask value " + std::to_string(vals[i]) + " outside [0,1]");
            }
            out[i] = 1.0 + vals[i];
        }
    } else {
        for (size_t i = 0; i < vals.size(); ++i) {
            out[i] = 1.0 + transform_g(vals[i], params);
        }
    }
    return Tensor::from_values(mask.shape(), std::move(out));
}

std::vector<std::pair<double, double>> curve_samples(const TransformParams& params,
                                                     int count) {
    if (count < 2) throw ValueError("curve_samples needs count >= 2");
    std::vector<std::pair<double, double>> samples;
    samples.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double m = (double)i / (double)(count - 1);
        samples.emplace_back(m, transform_g(m, params));
    }
    return samples;
}

}  // namespace mcan
