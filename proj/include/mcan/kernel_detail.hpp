// SPDX-License-Identifier: Apache-2.0
//
// Row-level helpers shared by the serial and parallel kernel variants.
// Both variants must produce bitwise-identical results, so any summation
// scheme that reorders additions lives here and is used by both sides.

#pragma once

#include <cstdint>

#include "mcan/kernels.hpp"

namespace mcan::kernels::detail {

// out[i] += w * x[i]
inline void axpy(double* out, const double* x, double w, int n) {
    for (int i = 0; i < n; ++i) out[i] += w * x[i];
}

// Four-lane dot-product accumulator. Element i of a row goes to lane i%4 and
// the tail goes to lane 0; lanes combine as ((s0+s1)+(s2+s3)) only at the very
// end, so chains stay short and the loop auto-vectorizes. Both kernel variants
// share this scheme, which is what keeps them bitwise identical.
struct DotAcc {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    double combine() const { return (s0 + s1) + (s2 + s3); }
};

inline void dot4_acc(DotAcc& acc, const double* a, const double* b, int n) {
    double s0 = acc.s0, s1 = acc.s1, s2 = acc.s2, s3 = acc.s3;
    const int n4 = n & ~3;
    for (int i = 0; i < n4; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (int i = n4; i < n; ++i) s0 += a[i] * b[i];
    acc.s0 = s0;
    acc.s1 = s1;
    acc.s2 = s2;
    acc.s3 = s3;
}

inline double dot4(const double* a, const double* b, int n) {
    DotAcc acc;
    dot4_acc(acc, a, b, n);
    return acc.combine();
}

// Eight-lane variant for the widest vector units; element i goes to lane i%8,
// tail to lane 0, lanes combine pairwise at the end.
struct DotAcc8 {
    double s[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    double combine() const {
        return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
    }
};

inline void dot8_acc(DotAcc8& acc, const double* a, const double* b, int n) {
    double s0 = acc.s[0], s1 = acc.s[1], s2 = acc.s[2], s3 = acc.s[3];
    double s4 = acc.s[4], s5 = acc.s[5], s6 = acc.s[6], s7 = acc.s[7];
    const int n8 = n & ~7;
    for (int i = 0; i < n8; i += 8) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        s4 += a[i + 4] * b[i + 4];
        s5 += a[i + 5] * b[i + 5];
        s6 += a[i + 6] * b[i + 6];
        s7 += a[i + 7] * b[i + 7];
    }
    for (int i = n8; i < n; ++i) s0 += a[i] * b[i];
    acc.s[0] = s0;
    acc.s[1] = s1;
    acc.s[2] = s2;
    acc.s[3] = s3;
    acc.s[4] = s4;
    acc.s[5] = s5;
    acc.s[6] = s6;
    acc.s[7] = s7;
}

// Range of output columns ow for which iw = ow*stride - padding + dilation*kcol
// lands inside [0, w).
struct OwRange {
    int lo;
    int hi;  // exclusive
};

inline OwRange ow_range(const Conv2dGeom& g, int kcol) {
    const int shift = g.dilation * kcol - g.padding;
    // iw = ow*stride + shift in [0, w)
    int lo = 0;
    if (shift < 0) lo = (-shift + g.stride - 1) / g.stride;
    int hi = (g.w - 1 - shift) / g.stride + 1;
    const int ow_n = g.out_w();
    if (hi > ow_n) hi = ow_n;
    if (lo > hi) lo = hi;
    return {lo, hi};
}

// orow[ow] += w * irow[ow*stride + shift] over the valid ow range.
inline void conv_row_axpy(double* orow, const double* irow, double w, const Conv2dGeom& g,
                          int kcol) {
    const auto [lo, hi] = ow_range(g, kcol);
    const int shift = g.dilation * kcol - g.padding;
    if (g.stride == 1) {
        axpy(orow + lo, irow + lo + shift, w, hi - lo);
    } else {
        for (int ow = lo; ow < hi; ++ow) orow[ow] += w * irow[ow * g.stride + shift];
    }
}

// buf[ow*stride + shift] += w * gorow[ow] over the valid ow range
// (transpose of conv_row_axpy; used by the input-gradient pass).
inline void conv_row_axpy_t(double* buf, const double* gorow, double w, const Conv2dGeom& g,
                            int kcol) {
    const auto [lo, hi] = ow_range(g, kcol);
    const int shift = g.dilation * kcol - g.padding;
    if (g.stride == 1) {
        axpy(buf + lo + shift, gorow + lo, w, hi - lo);
    } else {
        for (int ow = lo; ow < hi; ++ow) buf[ow * g.stride + shift] += w * gorow[ow];
    }
}

// Accumulates sum over valid ow of gorow[ow] * irow[ow*stride + shift].
inline void conv_row_dot_acc(DotAcc& acc, const double* gorow, const double* irow,
                             const Conv2dGeom& g, int kcol) {
    const auto [lo, hi] = ow_range(g, kcol);
    const int shift = g.dilation * kcol - g.padding;
    if (g.stride == 1) {
        dot4_acc(acc, gorow + lo, irow + lo + shift, hi - lo);
    } else {
        for (int ow = lo; ow < hi; ++ow) acc.s0 += gorow[ow] * irow[ow * g.stride + shift];
    }
}

}  // namespace mcan::kernels::detail
