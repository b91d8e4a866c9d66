// SPDX-License-Identifier: Apache-2.0
//
// Dense compute kernels behind the tensor ops. Every kernel exists in two
// variants with identical numerical contracts:
//
//   kernels::serial   - plain nested loops, the reference implementation
//   kernels::parallel - OpenMP-parallel, vectorization-friendly loop nests
//
// Both variants accumulate into each output element in the same index order,
// so their results are bitwise identical and independent of thread count.
// The active variant is selected process-wide via set_backend(); the default
// is parallel when built with OpenMP.

#pragma once

#include <cstdint>

namespace mcan::kernels {

enum class Backend { serial, parallel };

Backend backend();
void set_backend(Backend b);
bool built_with_openmp();

// Geometry of a 2-d cross-correlation. Square stride/dilation/padding.
struct Conv2dGeom {
    int batch = 1;
    int cin = 1;
    int cout = 1;
    int h = 1;
    int w = 1;
    int kh = 1;
    int kw = 1;
    int stride = 1;
    int dilation = 1;
    int padding = 0;

    int out_h() const { return (h + 2 * padding - dilation * (kh - 1) - 1) / stride + 1; }
    int out_w() const { return (w + 2 * padding - dilation * (kw - 1) - 1) / stride + 1; }
    bool valid() const {
        return batch >= 1 && cin >= 1 && cout >= 1 && stride >= 1 && dilation >= 1 &&
               padding >= 0 && h + 2 * padding >= dilation * (kh - 1) + 1 &&
               w + 2 * padding >= dilation * (kw - 1) + 1;
    }
};

namespace serial {

// out[b,co,oh,ow] = bias[co] + sum_{ci,kh,kw} in[b,ci,ih,iw] * k[co,ci,kh,kw]
void conv2d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    const Conv2dGeom& g);
// gin[b,ci,ih,iw] += sum_{co,kh,kw} gout[b,co,oh,ow] * k[co,ci,kh,kw]
void conv2d_backward_input(const double* gout, const double* kernel, double* gin,
                           const Conv2dGeom& g);
// gk[co,ci,kh,kw] += sum_{b,oh,ow} gout[b,co,oh,ow] * in[b,ci,ih,iw]
void conv2d_backward_kernel(const double* gout, const double* in, double* gk,
                            const Conv2dGeom& g);
// gbias[co] += sum_{b,oh,ow} gout[b,co,oh,ow]
void conv2d_backward_bias(const double* gout, double* gbias, const Conv2dGeom& g);

// out[m,n] = sum_k a[m,k] * b[k,n]
void matmul(const double* a, const double* b, double* out, int m, int k, int n);
// ga[m,k] += sum_n gout[m,n] * b[k,n]
void matmul_grad_a(const double* gout, const double* b, double* ga, int m, int k, int n);
// gb[k,n] += sum_m a[m,k] * gout[m,n]
void matmul_grad_b(const double* gout, const double* a, double* gb, int m, int k, int n);

}  // namespace serial

namespace parallel {

void conv2d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    const Conv2dGeom& g);
void conv2d_backward_input(const double* gout, const double* kernel, double* gin,
                           const Conv2dGeom& g);
void conv2d_backward_kernel(const double* gout, const double* in, double* gk,
                            const Conv2dGeom& g);
void conv2d_backward_bias(const double* gout, double* gbias, const Conv2dGeom& g);

void matmul(const double* a, const double* b, double* out, int m, int k, int n);
void matmul_grad_a(const double* gout, const double* b, double* ga, int m, int k, int n);
void matmul_grad_b(const double* gout, const double* a, double* gb, int m, int k, int n);

}  // namespace parallel

// Dispatch to the active backend.
void conv2d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    const Conv2dGeom& g);
void conv2d_backward_input(const double* gout, const double* kernel, double* gin,
                           const Conv2dGeom& g);
void conv2d_backward_kernel(const double* gout, const double* in, double* gk,
                            const Conv2dGeom& g);
void conv2d_backward_bias(const double* gout, double* gbias, const Conv2dGeom& g);
void matmul(const double* a, const double* b, double* out, int m, int k, int n);
void matmul_grad_a(const double* gout, const double* b, double* ga, int m, int k, int n);
void matmul_grad_b(const double* gout, const double* a, double* gb, int m, int k, int n);

}  // namespace mcan::kernels
