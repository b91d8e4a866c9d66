// SPDX-License-Identifier: Apache-2.0
//
// Seeded random generator with explicitly specified output mappings, so
// streams are reproducible bit-for-bit across standard library versions
// (std::uniform_real_distribution makes no such promise).

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mcan {

class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1): top 53 bits of the engine output.
    double uniform01() { return (double)(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [lo, hi] via rejection-free modulo (ranges here are
    // tiny relative to 2^64, so the bias is far below double precision).
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + (int64_t)(engine_() % (uint64_t)(hi - lo + 1));
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller (cosine branch only; two draws each).
    double gaussian() {
        const double u1 = (double)((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = (size_t)uniform_int(0, (int64_t)i - 1);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace mcan
