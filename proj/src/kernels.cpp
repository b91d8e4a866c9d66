// SPDX-License-Identifier: Apache-2.0

#include "mcan/kernels.hpp"

#include <atomic>

namespace mcan::kernels {

namespace {
std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::parallel
#else
    Backend::serial
#endif
};
}  // namespace

Backend backend() { return g_backend.load(std::memory_order_relaxed); }
void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

bool built_with_openmp() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

#define MCAN_DISPATCH(fn, ...)                  \
    if (backend() == Backend::parallel) {       \
        parallel::fn(__VA_ARGS__);              \
    } else {                                    \
        serial::fn(__VA_ARGS__);                \
    }

void conv2d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    const Conv2dGeom& g) {
    MCAN_DISPATCH(conv2d_forward, in, kernel, bias, out, g)
}
void conv2d_backward_input(const double* gout, const double* kernel, double* gin,
                           const Conv2dGeom& g) {
    MCAN_DISPATCH(conv2d_backward_input, gout, kernel, gin, g)
}
void conv2d_backward_kernel(const double* gout, const double* in, double* gk,
                            const Conv2dGeom& g) {
    MCAN_DISPATCH(conv2d_backward_kernel, gout, in, gk, g)
}
void conv2d_backward_bias(const double* gout, double* gbias, const Conv2dGeom& g) {
    MCAN_DISPATCH(conv2d_backward_bias, gout, gbias, g)
}
void matmul(const double* a, const double* b, double* out, int m, int k, int n) {
    MCAN_DISPATCH(matmul, a, b, out, m, k, n)
}
void matmul_grad_a(const double* gout, const double* b, double* ga, int m, int k, int n) {
    MCAN_DISPATCH(matmul_grad_a, gout, b, ga, m, k, n)
}
void matmul_grad_b(const double* gout, const double* a, double* gb, int m, int k, int n) {
    MCAN_DISPATCH(matmul_grad_b, gout, a, gb, m, k, n)
}

#undef MCAN_DISPATCH

}  // namespace mcan::kernels
