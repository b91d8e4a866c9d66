// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels: straightforward loop nests, no threading. The parallel
// variants accumulate per output element in the same index order as these,
// which keeps the two backends bitwise comparable in tests.

#include "mcan/kernels.hpp"

#include "mcan/kernel_detail.hpp"

namespace mcan::kernels::serial {

void conv2d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    const Conv2dGeom& g) {
    const int oh_n = g.out_h(), ow_n = g.out_w();
    for (int b = 0; b < g.batch; ++b) {
        for (int co = 0; co < g.cout; ++co) {
            double* oplane = out + ((int64_t)b * g.cout + co) * oh_n * ow_n;
            for (int oh = 0; oh < oh_n; ++oh) {
                for (int ow = 0; ow < ow_n; ++ow) {
                    double acc = bias ? bias[co] : 0.0;
                    for (int ci = 0; ci < g.cin; ++ci) {
                        const double* iplane = in + ((int64_t)b * g.cin + ci) * g.h * g.w;
                        const double* kslice =
                            kernel + ((int64_t)co * g.cin + ci) * g.kh * g.kw;
                        for (int r = 0; r < g.kh; ++r) {
                            const int ih = oh * g.stride - g.padding + g.dilation * r;
                            if (ih < 0 || ih >= g.h) continue;
                            for (int c = 0; c < g.kw; ++c) {
                                const int iw = ow * g.stride - g.padding + g.dilation * c;
                                if (iw < 0 || iw >= g.w) continue;
                                acc += iplane[ih * g.w + iw] * kslice[r * g.kw + c];
                            }
                        }
                    }
                    oplane[oh * ow_n + ow] = acc;
                }
            }
        }
    }
}

void conv2d_backward_input(const double* gout, const double* kernel, double* gin,
                           const Conv2dGeom& g) {
    const int oh_n = g.out_h(), ow_n = g.out_w();
    for (int b = 0; b < g.batch; ++b) {
        for (int ci = 0; ci < g.cin; ++ci) {
            double* gplane = gin + ((int64_t)b * g.cin + ci) * g.h * g.w;
            for (int ih = 0; ih < g.h; ++ih) {
                for (int iw = 0; iw < g.w; ++iw) {
                    double acc = 0.0;
                    for (int co = 0; co < g.cout; ++co) {
                        const double* goplane =
                            gout + ((int64_t)b * g.cout + co) * oh_n * ow_n;
                        const double* kslice =
                            kernel + ((int64_t)co * g.cin + ci) * g.kh * g.kw;
                        for (int r = 0; r < g.kh; ++r) {
                            const int num_h = ih + g.padding - g.dilation * r;
                            if (num_h < 0 || num_h % g.stride != 0) continue;
                            const int oh = num_h / g.stride;
                            if (oh >= oh_n) continue;
                            for (int c = 0; c < g.kw; ++c) {
                                const int num_w = iw + g.padding - g.dilation * c;
                                if (num_w < 0 || num_w % g.stride != 0) continue;
                                const int ow = num_w / g.stride;
                                if (ow >= ow_n) continue;
                                acc += goplane[oh * ow_n + ow] * kslice[r * g.kw + c];
                            }
                        }
                    }
                    gplane[ih * g.w + iw] += acc;
                }
            }
        }
    }
}

void conv2d_backward_kernel(const double* gout, const double* in, double* gk,
                            const Conv2dGeom& g) {
    const int oh_n = g.out_h(), ow_n = g.out_w();
    for (int co = 0; co < g.cout; ++co) {
        for (int ci = 0; ci < g.cin; ++ci) {
            double* gkslice = gk + ((int64_t)co * g.cin + ci) * g.kh * g.kw;
            for (int r = 0; r < g.kh; ++r) {
                for (int c = 0; c < g.kw; ++c) {
                    detail::DotAcc acc;
                    for (int b = 0; b < g.batch; ++b) {
                        const double* goplane =
                            gout + ((int64_t)b * g.cout + co) * oh_n * ow_n;
                        const double* iplane = in + ((int64_t)b * g.cin + ci) * g.h * g.w;
                        for (int oh = 0; oh < oh_n; ++oh) {
                            const int ih = oh * g.stride - g.padding + g.dilation * r;
                            if (ih < 0 || ih >= g.h) continue;
                            detail::conv_row_dot_acc(acc, goplane + oh * ow_n,
                                                     iplane + ih * g.w, g, c);
                        }
                    }
                    gkslice[r * g.kw + c] += acc.combine();
                }
            }
        }
    }
}

void conv2d_backward_bias(const double* gout, double* gbias, const Conv2dGeom& g) {
    const int64_t plane = (int64_t)g.out_h() * g.out_w();
    for (int co = 0; co < g.cout; ++co) {
        double acc = 0.0;
        for (int b = 0; b < g.batch; ++b) {
            const double* goplane = gout + ((int64_t)b * g.cout + co) * plane;
            for (int64_t i = 0; i < plane; ++i) acc += goplane[i];
        }
        gbias[co] += acc;
    }
}

void matmul(const double* a, const double* b, double* out, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* orow = out + (int64_t)i * n;
        for (int j = 0; j < n; ++j) orow[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            detail::axpy(orow, b + (int64_t)p * n, a[(int64_t)i * k + p], n);
        }
    }
}

void matmul_grad_a(const double* gout, const double* b, double* ga, int m, int k, int n) {
    // ga[i,p] += <gout row i, b row p>
    for (int i = 0; i < m; ++i) {
        const double* grow = gout + (int64_t)i * n;
        for (int p = 0; p < k; ++p) {
            ga[(int64_t)i * k + p] += detail::dot4(grow, b + (int64_t)p * n, n);
        }
    }
}

void matmul_grad_b(const double* gout, const double* a, double* gb, int m, int k, int n) {
    // gb[p,:] += sum_i a[i,p] * gout[i,:]
    for (int p = 0; p < k; ++p) {
        double* gbrow = gb + (int64_t)p * n;
        for (int i = 0; i < m; ++i) {
            detail::axpy(gbrow, gout + (int64_t)i * n, a[(int64_t)i * k + p], n);
        }
    }
}

}  // namespace mcan::kernels::serial
