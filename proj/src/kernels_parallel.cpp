// SPDX-License-Identifier: Apache-2.0
//
// OpenMP kernels. Work is split over disjoint output slices; each output
// element is accumulated by exactly one thread in the same index order as the
// serial reference, so results are bitwise identical to kernels::serial and
// independent of the thread count.
//
// The stride-1 3x3 and 1x1 geometries carry nearly all of the training
// compute, so they get dedicated paths: planes are copied into zero-padded
// buffers once and the kernel taps run bounds-free over contiguous rows.
// A zero pad tap contributes an exact +0.0, so the padded sums round
// identically to the bounds-checked reference.

#include <cstdint>
#include <vector>

#include "mcan/kernel_detail.hpp"
#include "mcan/kernels.hpp"

namespace mcan::kernels::parallel {

namespace {

// Below this many multiply-adds the fork/join overhead outweighs the win.
constexpr int64_t kParallelGrain = 1 << 15;

int64_t conv_macs(const Conv2dGeom& g) {
    return (int64_t)g.batch * g.cout * g.out_h() * g.out_w() * g.cin * g.kh * g.kw;
}

bool is_fast3x3(const Conv2dGeom& g) { return g.stride == 1 && g.kh == 3 && g.kw == 3; }
bool is_fast1x1(const Conv2dGeom& g) {
    return g.stride == 1 && g.kh == 1 && g.kw == 1 && g.padding == 0;
}

// Copies planes [count, h, w] into buffers [count, h+2*margin, w+2*margin]
// with a zero border.
std::vector<double> pad_planes(const double* planes, int64_t count, int h, int w, int margin,
                               bool parallel_over_planes) {
    const int ph = h + 2 * margin, pw = w + 2 * margin;
    std::vector<double> padded((size_t)count * ph * pw, 0.0);
#pragma omp parallel for schedule(static) if (parallel_over_planes && count > 1)
    for (int64_t p = 0; p < count; ++p) {
        const double* src = planes + p * h * w;
        double* dst = padded.data() + p * ph * pw + (int64_t)margin * pw + margin;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) dst[x] = src[x];
            src += w;
            dst += pw;
        }
    }
    return padded;
}

// orow[ow] += sum over the 9 taps of k9 against three padded rows, taps
// applied in (r, c) order to match the reference accumulation order.
void stencil3x3_row(double* orow, const double* r0, const double* r1, const double* r2,
                    const double* k9, int d, int n) {
    const double k0 = k9[0], k1 = k9[1], k2 = k9[2];
    const double k3 = k9[3], k4 = k9[4], k5 = k9[5];
    const double k6 = k9[6], k7 = k9[7], k8 = k9[8];
    for (int ow = 0; ow < n; ++ow) {
        double acc = orow[ow];
        acc += k0 * r0[ow];
        acc += k1 * r0[ow + d];
        acc += k2 * r0[ow + 2 * d];
        acc += k3 * r1[ow];
        acc += k4 * r1[ow + d];
        acc += k5 * r1[ow + 2 * d];
        acc += k6 * r2[ow];
        acc += k7 * r2[ow + d];
        acc += k8 * r2[ow + 2 * d];
        orow[ow] = acc;
    }
}

}  // namespace

void conv2d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    const Conv2dGeom& g) {
    const int oh_n = g.out_h(), ow_n = g.out_w();
    const bool big = conv_macs(g) > kParallelGrain;

    if (is_fast3x3(g)) {
        const int d = g.dilation, pw = g.w + 2 * g.padding;
        const auto padded =
            pad_planes(in, (int64_t)g.batch * g.cin, g.h, g.w, g.padding, big);
#pragma omp parallel for collapse(2) schedule(static) if (big)
        for (int b = 0; b < g.batch; ++b) {
            for (int co = 0; co < g.cout; ++co) {
                double* oplane = out + ((int64_t)b * g.cout + co) * oh_n * ow_n;
                const double bv = bias ? bias[co] : 0.0;
                for (int i = 0; i < oh_n * ow_n; ++i) oplane[i] = bv;
                for (int ci = 0; ci < g.cin; ++ci) {
                    const double* ipad =
                        padded.data() + ((int64_t)b * g.cin + ci) * (g.h + 2 * g.padding) * pw;
                    const double* k9 = kernel + ((int64_t)co * g.cin + ci) * 9;
                    for (int oh = 0; oh < oh_n; ++oh) {
                        // padded row index for tap r is oh + d*r
                        const double* r0 = ipad + (int64_t)oh * pw;
                        stencil3x3_row(oplane + (int64_t)oh * ow_n, r0, r0 + (int64_t)d * pw,
                                       r0 + 2 * (int64_t)d * pw, k9, d, ow_n);
                    }
                }
            }
        }
        return;
    }

    if (is_fast1x1(g)) {
        const int64_t plane = (int64_t)g.h * g.w;
#pragma omp parallel for collapse(2) schedule(static) if (big)
        for (int b = 0; b < g.batch; ++b) {
            for (int co = 0; co < g.cout; ++co) {
                double* oplane = out + ((int64_t)b * g.cout + co) * plane;
                const double bv = bias ? bias[co] : 0.0;
                for (int64_t i = 0; i < plane; ++i) oplane[i] = bv;
                for (int ci = 0; ci < g.cin; ++ci) {
                    detail::axpy(oplane, in + ((int64_t)b * g.cin + ci) * plane,
                                 kernel[(int64_t)co * g.cin + ci], (int)plane);
                }
            }
        }
        return;
    }

#pragma omp parallel for collapse(2) schedule(static) if (big)
    for (int b = 0; b < g.batch; ++b) {
        for (int co = 0; co < g.cout; ++co) {
            double* oplane = out + ((int64_t)b * g.cout + co) * oh_n * ow_n;
            const double bv = bias ? bias[co] : 0.0;
            for (int i = 0; i < oh_n * ow_n; ++i) oplane[i] = bv;
            for (int ci = 0; ci < g.cin; ++ci) {
                const double* iplane = in + ((int64_t)b * g.cin + ci) * g.h * g.w;
                const double* kslice = kernel + ((int64_t)co * g.cin + ci) * g.kh * g.kw;
                for (int r = 0; r < g.kh; ++r) {
                    for (int c = 0; c < g.kw; ++c) {
                        const double w = kslice[r * g.kw + c];
                        for (int oh = 0; oh < oh_n; ++oh) {
                            const int ih = oh * g.stride - g.padding + g.dilation * r;
                            if (ih < 0 || ih >= g.h) continue;
                            detail::conv_row_axpy(oplane + oh * ow_n, iplane + ih * g.w, w,
                                                  g, c);
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_input(const double* gout, const double* kernel, double* gin,
                           const Conv2dGeom& g) {
    const int oh_n = g.out_h(), ow_n = g.out_w();
    const bool big = conv_macs(g) > kParallelGrain;

    if (is_fast3x3(g) && g.padding <= 2 * g.dilation) {
        // gin[ih,iw] += sum_{co,r,c} k[r,c] * gout[ih - d*r + p, iw - d*c + p],
        // i.e. a 3x3 stencil over gout padded with margin 2d - p, taps flipped.
        const int d = g.dilation;
        const int margin = 2 * d - g.padding;
        const int pw = ow_n + 2 * margin;
        const auto padded = pad_planes(gout, (int64_t)g.batch * g.cout, oh_n, ow_n, margin, big);
#pragma omp parallel for collapse(2) schedule(static) if (big)
        for (int b = 0; b < g.batch; ++b) {
            for (int ci = 0; ci < g.cin; ++ci) {
                std::vector<double> buf((size_t)g.h * g.w, 0.0);
                for (int co = 0; co < g.cout; ++co) {
                    const double* gpad =
                        padded.data() + ((int64_t)b * g.cout + co) * (oh_n + 2 * margin) * pw;
                    // Tap (r, c) of the forward kernel reads padded row
                    // ih + d*(2 - r), column iw + d*(2 - c); taps are applied
                    // in forward (r, c) order to match the reference.
                    const double* kk = kernel + ((int64_t)co * g.cin + ci) * 9;
                    for (int ih = 0; ih < g.h; ++ih) {
                        double* brow = buf.data() + (int64_t)ih * g.w;
                        const double* r0 = gpad + ((int64_t)ih + 2 * d) * pw;  // r = 0
                        const double* r1 = gpad + ((int64_t)ih + d) * pw;      // r = 1
                        const double* r2 = gpad + (int64_t)ih * pw;            // r = 2
                        const double k0 = kk[0], k1 = kk[1], k2 = kk[2];
                        const double k3 = kk[3], k4 = kk[4], k5 = kk[5];
                        const double k6 = kk[6], k7 = kk[7], k8 = kk[8];
                        for (int iw = 0; iw < g.w; ++iw) {
                            // column for tap c is iw + d*(2 - c)
                            double acc = brow[iw];
                            acc += k0 * r0[iw + 2 * d];
                            acc += k1 * r0[iw + d];
                            acc += k2 * r0[iw];
                            acc += k3 * r1[iw + 2 * d];
                            acc += k4 * r1[iw + d];
                            acc += k5 * r1[iw];
                            acc += k6 * r2[iw + 2 * d];
                            acc += k7 * r2[iw + d];
                            acc += k8 * r2[iw];
                            brow[iw] = acc;
                        }
                    }
                }
                double* gplane = gin + ((int64_t)b * g.cin + ci) * g.h * g.w;
                for (int i = 0; i < g.h * g.w; ++i) gplane[i] += buf[i];
            }
        }
        return;
    }

    if (is_fast1x1(g)) {
        const int64_t plane = (int64_t)g.h * g.w;
#pragma omp parallel for collapse(2) schedule(static) if (big)
        for (int b = 0; b < g.batch; ++b) {
            for (int ci = 0; ci < g.cin; ++ci) {
                std::vector<double> buf((size_t)plane, 0.0);
                for (int co = 0; co < g.cout; ++co) {
                    detail::axpy(buf.data(), gout + ((int64_t)b * g.cout + co) * plane,
                                 kernel[(int64_t)co * g.cin + ci], (int)plane);
                }
                double* gplane = gin + ((int64_t)b * g.cin + ci) * plane;
                for (int64_t i = 0; i < plane; ++i) gplane[i] += buf[i];
            }
        }
        return;
    }

#pragma omp parallel for collapse(2) schedule(static) if (big)
    for (int b = 0; b < g.batch; ++b) {
        for (int ci = 0; ci < g.cin; ++ci) {
            // Accumulate into a zeroed plane first, then fold into gin with a
            // single add per element; matches the serial reference rounding.
            std::vector<double> buf((size_t)g.h * g.w, 0.0);
            for (int co = 0; co < g.cout; ++co) {
                const double* goplane = gout + ((int64_t)b * g.cout + co) * oh_n * ow_n;
                const double* kslice = kernel + ((int64_t)co * g.cin + ci) * g.kh * g.kw;
                for (int r = 0; r < g.kh; ++r) {
                    for (int c = 0; c < g.kw; ++c) {
                        const double w = kslice[r * g.kw + c];
                        for (int oh = 0; oh < oh_n; ++oh) {
                            const int ih = oh * g.stride - g.padding + g.dilation * r;
                            if (ih < 0 || ih >= g.h) continue;
                            detail::conv_row_axpy_t(buf.data() + ih * g.w,
                                                    goplane + oh * ow_n, w, g, c);
                        }
                    }
                }
            }
            double* gplane = gin + ((int64_t)b * g.cin + ci) * g.h * g.w;
            for (int i = 0; i < g.h * g.w; ++i) gplane[i] += buf[i];
        }
    }
}

void conv2d_backward_kernel(const double* gout, const double* in, double* gk,
                            const Conv2dGeom& g) {
    const int oh_n = g.out_h(), ow_n = g.out_w();
    const bool big = conv_macs(g) > kParallelGrain;

    if (is_fast3x3(g)) {
        // gk[r,c] += sum_{b,oh,ow} gout[oh,ow] * ipad[oh + d*r, ow + d*c]
        // over the padded input. The batch loop is outermost so each plane is
        // streamed once while all nine tap accumulators stay live.
        const int d = g.dilation, pw = g.w + 2 * g.padding;
        const auto padded =
            pad_planes(in, (int64_t)g.batch * g.cin, g.h, g.w, g.padding, big);
#pragma omp parallel for schedule(static) if (big)
        for (int co = 0; co < g.cout; ++co) {
            std::vector<detail::DotAcc> accs((size_t)g.cin * 9);
            for (int b = 0; b < g.batch; ++b) {
                const double* goplane = gout + ((int64_t)b * g.cout + co) * oh_n * ow_n;
                for (int ci = 0; ci < g.cin; ++ci) {
                    const double* ipad = padded.data() + ((int64_t)b * g.cin + ci) *
                                                             (g.h + 2 * g.padding) * pw;
                    detail::DotAcc* tap = accs.data() + (size_t)ci * 9;
                    // Taps innermost: nine independent accumulator chains per
                    // row keep the FMA units busy on short rows.
                    for (int oh = 0; oh < oh_n; ++oh) {
                        const double* gorow = goplane + (int64_t)oh * ow_n;
                        for (int r = 0; r < 3; ++r) {
                            const double* iprow = ipad + ((int64_t)oh + (int64_t)d * r) * pw;
                            detail::dot4_acc(tap[r * 3 + 0], gorow, iprow, ow_n);
                            detail::dot4_acc(tap[r * 3 + 1], gorow, iprow + d, ow_n);
                            detail::dot4_acc(tap[r * 3 + 2], gorow, iprow + 2 * d, ow_n);
                        }
                    }
                }
            }
            for (int ci = 0; ci < g.cin; ++ci) {
                double* gkslice = gk + ((int64_t)co * g.cin + ci) * 9;
                for (int t = 0; t < 9; ++t) gkslice[t] += accs[(size_t)ci * 9 + t].combine();
            }
        }
        return;
    }

    if (is_fast1x1(g)) {
        const int64_t plane = (int64_t)g.h * g.w;
#pragma omp parallel for schedule(static) if (big)
        for (int co = 0; co < g.cout; ++co) {
            std::vector<detail::DotAcc8> accs(g.cin);
            for (int b = 0; b < g.batch; ++b) {
                const double* goplane = gout + ((int64_t)b * g.cout + co) * plane;
                for (int ci = 0; ci < g.cin; ++ci) {
                    detail::dot8_acc(accs[ci], goplane,
                                     in + ((int64_t)b * g.cin + ci) * plane, (int)plane);
                }
            }
            for (int ci = 0; ci < g.cin; ++ci) {
                gk[(int64_t)co * g.cin + ci] += accs[ci].combine();
            }
        }
        return;
    }

#pragma omp parallel for collapse(2) schedule(static) if (big)
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
    const bool big = (int64_t)g.batch * g.cout * plane > kParallelGrain;
#pragma omp parallel for schedule(static) if (big)
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
    const bool big = (int64_t)m * k * n > kParallelGrain;
#pragma omp parallel for schedule(static) if (big)
    for (int i = 0; i < m; ++i) {
        double* orow = out + (int64_t)i * n;
        for (int j = 0; j < n; ++j) orow[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            detail::axpy(orow, b + (int64_t)p * n, a[(int64_t)i * k + p], n);
        }
    }
}

void matmul_grad_a(const double* gout, const double* b, double* ga, int m, int k, int n) {
    const bool big = (int64_t)m * k * n > kParallelGrain;
#pragma omp parallel for schedule(static) if (big)
    for (int i = 0; i < m; ++i) {
        const double* grow = gout + (int64_t)i * n;
        for (int p = 0; p < k; ++p) {
            ga[(int64_t)i * k + p] += detail::dot4(grow, b + (int64_t)p * n, n);
        }
    }
}

void matmul_grad_b(const double* gout, const double* a, double* gb, int m, int k, int n) {
    const bool big = (int64_t)m * k * n > kParallelGrain;
#pragma omp parallel for schedule(static) if (big)
    for (int p = 0; p < k; ++p) {
        double* gbrow = gb + (int64_t)p * n;
        for (int i = 0; i < m; ++i) {
            detail::axpy(gbrow, gout + (int64_t)i * n, a[(int64_t)i * k + p], n);
        }
    }
}

}  // namespace mcan::kernels::parallel
