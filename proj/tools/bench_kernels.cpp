// SPDX-License-Identifier: Apache-2.0
//
// Timing comparison of the serial reference kernels against the OpenMP
// variants, at the convolution geometries the training loop actually runs.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "mcan/kernels.hpp"

using mcan::kernels::Conv2dGeom;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<double> randu(size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = (double)(rng() >> 11) * 0x1.0p-53 - 0.5;
    return v;
}

struct BenchCase {
    std::string name;
    Conv2dGeom g;
};

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_s();
        fn();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

void bench_conv(const BenchCase& bc) {
    const Conv2dGeom& g = bc.g;
    const auto in = randu((size_t)g.batch * g.cin * g.h * g.w, 1);
    const auto k = randu((size_t)g.cout * g.cin * g.kh * g.kw, 2);
    const auto bias = randu(g.cout, 3);
    const size_t out_n = (size_t)g.batch * g.cout * g.out_h() * g.out_w();
    std::vector<double> out(out_n), gin(in.size()), gk(k.size());
    const auto gout = randu(out_n, 4);

    const double macs = (double)g.batch * g.cout * g.out_h() * g.out_w() * g.cin * g.kh * g.kw;
    auto report = [&](const char* what, double t_serial, double t_parallel) {
        std::printf("%-28s %-16s serial %8.2f ms (%6.2f GF/s)  parallel %8.2f ms (%6.2f GF/s)  speedup %.2fx\n",
                    bc.name.c_str(), what, t_serial * 1e3, 2e-9 * macs / t_serial,
                    t_parallel * 1e3, 2e-9 * macs / t_parallel, t_serial / t_parallel);
    };

    namespace ks = mcan::kernels::serial;
    namespace kp = mcan::kernels::parallel;
    report("forward",
           time_best_of(3, [&] { ks::conv2d_forward(in.data(), k.data(), bias.data(), out.data(), g); }),
           time_best_of(3, [&] { kp::conv2d_forward(in.data(), k.data(), bias.data(), out.data(), g); }));
    report("backward_input",
           time_best_of(3, [&] { ks::conv2d_backward_input(gout.data(), k.data(), gin.data(), g); }),
           time_best_of(3, [&] { kp::conv2d_backward_input(gout.data(), k.data(), gin.data(), g); }));
    report("backward_kernel",
           time_best_of(3, [&] { ks::conv2d_backward_kernel(gout.data(), in.data(), gk.data(), g); }),
           time_best_of(3, [&] { kp::conv2d_backward_kernel(gout.data(), in.data(), gk.data(), g); }));
}

}  // namespace

int main() {
    std::printf("openmp: %s\n", mcan::kernels::built_with_openmp() ? "yes" : "no");

    std::vector<BenchCase> cases = {
        {"stem 1->32 32x32 s2", {32, 1, 32, 32, 32, 3, 3, 2, 1, 1}},
        {"block 32->32 16x16 d1", {32, 32, 32, 16, 16, 3, 3, 1, 1, 1}},
        {"block 32->32 16x16 d2", {32, 32, 32, 16, 16, 3, 3, 1, 2, 2}},
        {"block 32->32 16x16 d4", {32, 32, 32, 16, 16, 3, 3, 1, 4, 4}},
        {"mask 1x1 32->32 16x16", {32, 32, 32, 16, 16, 1, 1, 1, 1, 0}},
        {"head 32->16 16x16", {32, 32, 16, 16, 16, 3, 3, 1, 1, 1}},
    };
    for (const auto& bc : cases) bench_conv(bc);

    // One training-step-equivalent volume of the dominant block geometry.
    return 0;
}
