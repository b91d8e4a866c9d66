// SPDX-License-Identifier: Apache-2.0

#include "mcan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mcan/errors.hpp"
#include "mcan/kernels.hpp"

namespace mcan {

int64_t shape_size(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ',';
        os << s[i];
    }
    os << ']';
    return os.str();
}

namespace {

thread_local Tape* t_active_tape = nullptr;

void check_shape(const Shape& s) {
    for (int d : s) {
        if (d <= 0) throw ShapeError("non-positive dimension in " + shape_str(s));
    }
}

std::vector<double>& grad_of(TensorData& d) {
    if (d.grad.empty()) d.grad.assign(d.values.size(), 0.0);
    return d.grad;
}

using DataPtr = std::shared_ptr<TensorData>;

bool wants_grad(const DataPtr& d) { return d->requires_grad; }

}  // namespace

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
    check_shape(shape);
    auto d = std::make_shared<TensorData>();
    d->values.assign((size_t)shape_size(shape), value);
    d->shape = std::move(shape);
    return Tensor(std::move(d));
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values) {
    check_shape(shape);
    if (shape_size(shape) != (int64_t)values.size()) {
        throw ShapeError("shape " + shape_str(shape) + " needs " +
                         std::to_string(shape_size(shape)) + " values, got " +
                         std::to_string(values.size()));
    }
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->values = std::move(values);
    return Tensor(std::move(d));
}

Tensor Tensor::scalar(double value) { return from_values({}, {value}); }

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
    return data_->values[0];
}

std::span<const double> Tensor::grad() const { return data_->grad; }

std::vector<double>& Tensor::grad_ref() { return grad_of(*data_); }

void Tensor::zero_grad() { std::fill(data_->grad.begin(), data_->grad.end(), 0.0); }

int Tape::record(const std::shared_ptr<TensorData>& output, std::function<void()> rule) {
    output->tape = this;
    output->node_id = (int)rules_.size();
    rules_.push_back(std::move(rule));
    return output->node_id;
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) {
        throw ValueError("backward requires a scalar loss, got shape " +
                         shape_str(loss.shape()));
    }
    if (loss.data()->tape != this || loss.node_id() < 0) {
        throw ValueError("loss tensor is not recorded on this tape");
    }
    grad_of(*loss.data())[0] = 1.0;
    for (auto it = rules_.rbegin(); it != rules_.rend(); ++it) (*it)();
}

TapeScope::TapeScope(Tape& tape) : previous_(t_active_tape) { t_active_tape = &tape; }
TapeScope::~TapeScope() { t_active_tape = previous_; }

Tape* active_tape() { return t_active_tape; }

namespace {

Tensor make_result(Shape shape, std::vector<double> values) {
    return Tensor::from_values(std::move(shape), std::move(values));
}

// Record `rule` for `out` if a tape is open and any input feeds gradients.
template <typename Rule>
void maybe_record(const Tensor& out, bool any_input_tracked, Rule&& rule) {
    if (t_active_tape == nullptr || !any_input_tracked) return;
    out.data()->requires_grad = true;
    t_active_tape->record(out.data(), std::forward<Rule>(rule));
}

// Right-aligned broadcast of b onto a's shape. Returns per-axis strides of b
// expressed in a's coordinate system (0 on broadcast axes).
std::vector<int64_t> broadcast_strides(const Shape& a, const Shape& b) {
    if (b.size() > a.size()) {
        throw ShapeError("cannot broadcast " + shape_str(b) + " onto " + shape_str(a));
    }
    std::vector<int64_t> bstride(a.size(), 0);
    int64_t stride = 1;
    for (int i = (int)b.size() - 1; i >= 0; --i) {
        const int ai = (int)a.size() - (int)b.size() + i;
        if (b[i] == a[ai]) {
            bstride[ai] = stride;
        } else if (b[i] == 1) {
            bstride[ai] = 0;
        } else {
            throw ShapeError("cannot broadcast " + shape_str(b) + " onto " + shape_str(a));
        }
        stride *= b[i];
    }
    return bstride;
}

// Calls fn(flat_a, flat_b) for every element of a in row-major order.
template <typename Fn>
void for_each_broadcast(const Shape& a, const std::vector<int64_t>& bstride, Fn&& fn) {
    const int rank = (int)a.size();
    const int64_t n = shape_size(a);
    std::vector<int> idx(rank, 0);
    int64_t bflat = 0;
    for (int64_t i = 0; i < n; ++i) {
        fn(i, bflat);
        for (int ax = rank - 1; ax >= 0; --ax) {
            ++idx[ax];
            bflat += bstride[ax];
            if (idx[ax] < a[ax]) break;
            bflat -= (int64_t)idx[ax] * bstride[ax];
            idx[ax] = 0;
        }
    }
}

}  // namespace

Tensor elementwise(EwiseKind kind, const Tensor& a, const Tensor& b) {
    const bool same = a.shape() == b.shape();
    std::vector<int64_t> bstride;
    if (!same) bstride = broadcast_strides(a.shape(), b.shape());

    const auto& av = a.data()->values;
    const auto& bv = b.data()->values;
    std::vector<double> out(av.size());
    if (same) {
        const int64_t n = (int64_t)av.size();
        switch (kind) {
            case EwiseKind::add:
#pragma omp parallel for schedule(static) if (n > 1 << 15)
                for (int64_t i = 0; i < n; ++i) out[i] = av[i] + bv[i];
                break;
            case EwiseKind::sub:
#pragma omp parallel for schedule(static) if (n > 1 << 15)
                for (int64_t i = 0; i < n; ++i) out[i] = av[i] - bv[i];
                break;
            default:
#pragma omp parallel for schedule(static) if (n > 1 << 15)
                for (int64_t i = 0; i < n; ++i) out[i] = av[i] * bv[i];
                break;
        }
    } else {
        auto apply = [kind](double x, double y) {
            switch (kind) {
                case EwiseKind::add: return x + y;
                case EwiseKind::sub: return x - y;
                default: return x * y;
            }
        };
        for_each_broadcast(a.shape(), bstride,
                           [&](int64_t i, int64_t j) { out[i] = apply(av[i], bv[j]); });
    }

    Tensor result = make_result(a.shape(), std::move(out));
    const bool need_a = wants_grad(a.data()), need_b = wants_grad(b.data());
    auto ad = a.data(), bd = b.data(), od = result.data();
    maybe_record(result, need_a || need_b, [kind, same, bstride, ad, bd, od, need_a,
                                            need_b]() {
        if (od->grad.empty()) return;
        const auto& g = od->grad;
        if (need_a) {
            auto& ga = grad_of(*ad);
            const auto& bv2 = bd->values;
            const int64_t n = (int64_t)g.size();
            if (kind == EwiseKind::mul) {
                if (same) {
#pragma omp parallel for schedule(static) if (n > 1 << 15)
                    for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * bv2[i];
                } else {
                    for_each_broadcast(ad->shape, bstride,
                                       [&](int64_t i, int64_t j) { ga[i] += g[i] * bv2[j]; });
                }
            } else {
#pragma omp parallel for schedule(static) if (n > 1 << 15)
                for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
            }
        }
        if (need_b) {
            auto& gb = grad_of(*bd);
            const auto& av2 = ad->values;
            const double sign = (kind == EwiseKind::sub) ? -1.0 : 1.0;
            if (same) {
                const int64_t n = (int64_t)g.size();
                if (kind == EwiseKind::mul) {
#pragma omp parallel for schedule(static) if (n > 1 << 15)
                    for (int64_t i = 0; i < n; ++i) gb[i] += g[i] * av2[i];
                } else {
#pragma omp parallel for schedule(static) if (n > 1 << 15)
                    for (int64_t i = 0; i < n; ++i) gb[i] += sign * g[i];
                }
            } else {
                if (kind == EwiseKind::mul) {
                    for_each_broadcast(ad->shape, bstride,
                                       [&](int64_t i, int64_t j) { gb[j] += g[i] * av2[i]; });
                } else {
                    for_each_broadcast(ad->shape, bstride,
                                       [&](int64_t i, int64_t j) { gb[j] += sign * g[i]; });
                }
            }
        }
    });
    return result;
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(EwiseKind::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(EwiseKind::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(EwiseKind::mul, a, b); }

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& t, Fwd&& fwd, Bwd&& bwd) {
    const auto& tv = t.data()->values;
    const int64_t n = (int64_t)tv.size();
    std::vector<double> out(tv.size());
#pragma omp parallel for schedule(static) if (n > 1 << 14)
    for (int64_t i = 0; i < n; ++i) out[i] = fwd(tv[i]);
    Tensor result = make_result(t.shape(), std::move(out));
    auto td = t.data(), od = result.data();
    maybe_record(result, wants_grad(td), [td, od, bwd, n]() {
        if (od->grad.empty()) return;
        const auto& g = od->grad;
        auto& gt = grad_of(*td);
#pragma omp parallel for schedule(static) if (n > 1 << 14)
        for (int64_t i = 0; i < n; ++i) gt[i] += g[i] * bwd(td->values[i], od->values[i]);
    });
    return result;
}

}  // namespace

Tensor add_scalar(const Tensor& t, double c) {
    return unary_op(
        t, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& t, double c) {
    return unary_op(
        t, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Tensor log(const Tensor& t) {
    return unary_op(
        t, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor clamp(const Tensor& t, double lo, double hi) {
    if (!(lo <= hi)) throw ValueError("clamp bounds out of order");
    return unary_op(
        t, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& t) {
    return unary_op(
        t, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double s) { return s * (1.0 - s); });
}

Tensor relu(const Tensor& t) {
    return unary_op(
        t, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
        throw ShapeError("matmul expects [M,K]x[K,N], got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> out((size_t)m * n);
    kernels::matmul(a.values().data(), b.values().data(), out.data(), m, k, n);
    Tensor result = make_result({m, n}, std::move(out));
    auto ad = a.data(), bd = b.data(), od = result.data();
    const bool need_a = wants_grad(ad), need_b = wants_grad(bd);
    maybe_record(result, need_a || need_b, [ad, bd, od, need_a, need_b, m, k, n]() {
        if (od->grad.empty()) return;
        const double* g = od->grad.data();
        if (need_a) {
            kernels::matmul_grad_a(g, bd->values.data(), grad_of(*ad).data(), m, k, n);
        }
        if (need_b) {
            kernels::matmul_grad_b(g, ad->values.data(), grad_of(*bd).data(), m, k, n);
        }
    });
    return result;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride,
              int dilation, int padding) {
    if (input.shape().size() != 4 || kernel.shape().size() != 4) {
        throw ShapeError("conv2d expects 4-d input and kernel, got " +
                         shape_str(input.shape()) + " and " + shape_str(kernel.shape()));
    }
    if (bias.shape().size() != 1 || bias.shape()[0] != kernel.shape()[0]) {
        throw ShapeError("conv2d bias must be [Cout], got " + shape_str(bias.shape()));
    }
    if (input.shape()[1] != kernel.shape()[1]) {
        throw ShapeError("conv2d channel mismatch: input " + shape_str(input.shape()) +
                         " vs kernel " + shape_str(kernel.shape()));
    }
    kernels::Conv2dGeom g;
    g.batch = input.shape()[0];
    g.cin = input.shape()[1];
    g.h = input.shape()[2];
    g.w = input.shape()[3];
    g.cout = kernel.shape()[0];
    g.kh = kernel.shape()[2];
    g.kw = kernel.shape()[3];
    g.stride = stride;
    g.dilation = dilation;
    g.padding = padding;
    if (!g.valid()) {
        throw ShapeError("conv2d geometry invalid for input " + shape_str(input.shape()) +
                         ", kernel " + shape_str(kernel.shape()) + ", stride " +
                         std::to_string(stride) + ", dilation " + std::to_string(dilation) +
                         ", padding " + std::to_string(padding));
    }
    std::vector<double> out((size_t)g.batch * g.cout * g.out_h() * g.out_w());
    kernels::conv2d_forward(input.values().data(), kernel.values().data(),
                            bias.values().data(), out.data(), g);
    Tensor result = make_result({g.batch, g.cout, g.out_h(), g.out_w()}, std::move(out));
    auto id = input.data(), kd = kernel.data(), bd = bias.data(), od = result.data();
    const bool need_in = wants_grad(id), need_k = wants_grad(kd), need_b = wants_grad(bd);
    maybe_record(result, need_in || need_k || need_b,
                 [id, kd, bd, od, g, need_in, need_k, need_b]() {
                     if (od->grad.empty()) return;
                     const double* gout = od->grad.data();
                     if (need_in) {
                         kernels::conv2d_backward_input(gout, kd->values.data(),
                                                        grad_of(*id).data(), g);
                     }
                     if (need_k) {
                         kernels::conv2d_backward_kernel(gout, id->values.data(),
                                                         grad_of(*kd).data(), g);
                     }
                     if (need_b) {
                         kernels::conv2d_backward_bias(gout, grad_of(*bd).data(), g);
                     }
                 });
    return result;
}

Tensor reduce(ReduceKind kind, const Tensor& t, const std::optional<std::vector<int>>& axes) {
    const Shape& s = t.shape();
    std::vector<bool> reduced(s.size(), false);
    if (axes.has_value()) {
        for (int ax : *axes) {
            if (ax < 0 || ax >= (int)s.size()) {
                throw ShapeError("reduce axis " + std::to_string(ax) + " invalid for " +
                                 shape_str(s));
            }
            if (reduced[ax]) throw ShapeError("duplicate reduce axis " + std::to_string(ax));
            reduced[ax] = true;
        }
    } else {
        std::fill(reduced.begin(), reduced.end(), true);
    }

    Shape out_shape;
    int64_t count = 1;
    for (size_t i = 0; i < s.size(); ++i) {
        if (reduced[i]) {
            count *= s[i];
        } else {
            out_shape.push_back(s[i]);
        }
    }

    // Strides of the output in input coordinates (0 on reduced axes).
    std::vector<int64_t> ostride(s.size(), 0);
    int64_t stride = 1;
    for (int i = (int)s.size() - 1; i >= 0; --i) {
        if (!reduced[i]) {
            ostride[i] = stride;
            stride *= s[i];
        }
    }

    // Suffix reductions (all axes, or a trailing block such as a global
    // average pool) collapse contiguous blocks; everything else walks the
    // generic index counter.
    int split = (int)s.size();
    while (split > 0 && reduced[split - 1]) --split;
    const bool suffix = std::all_of(reduced.begin(), reduced.begin() + split,
                                    [](bool r) { return !r; });

    const auto& tv = t.data()->values;
    std::vector<double> out((size_t)shape_size(out_shape), 0.0);
    const double scale = (kind == ReduceKind::mean) ? 1.0 / (double)count : 1.0;
    if (suffix) {
        const int64_t blocks = (int64_t)out.size();
        const int64_t block_n = count;
#pragma omp parallel for schedule(static) if (blocks > 64)
        for (int64_t j = 0; j < blocks; ++j) {
            double acc = 0.0;
            const double* base = tv.data() + j * block_n;
            for (int64_t i = 0; i < block_n; ++i) acc += base[i];
            out[j] = acc * scale;
        }
    } else {
        for_each_broadcast(s, ostride, [&](int64_t i, int64_t j) { out[j] += tv[i]; });
        if (kind == ReduceKind::mean) {
            for (auto& v : out) v *= scale;
        }
    }

    Tensor result = make_result(std::move(out_shape), std::move(out));
    auto td = t.data(), od = result.data();
    maybe_record(result, wants_grad(td), [td, od, ostride, scale, suffix, count]() {
        if (od->grad.empty()) return;
        const auto& g = od->grad;
        auto& gt = grad_of(*td);
        if (suffix) {
            const int64_t blocks = (int64_t)g.size();
            const int64_t block_n = count;
#pragma omp parallel for schedule(static) if (blocks > 64)
            for (int64_t j = 0; j < blocks; ++j) {
                const double gj = g[j] * scale;
                double* base = gt.data() + j * block_n;
                for (int64_t i = 0; i < block_n; ++i) base[i] += gj;
            }
        } else {
            for_each_broadcast(td->shape, ostride,
                               [&](int64_t i, int64_t j) { gt[i] += g[j] * scale; });
        }
    });
    return result;
}

Tensor reduce_sum(const Tensor& t) { return reduce(ReduceKind::sum, t, std::nullopt); }
Tensor reduce_mean(const Tensor& t) { return reduce(ReduceKind::mean, t, std::nullopt); }

Tensor reshape(const Tensor& t, Shape new_shape) {
    check_shape(new_shape);
    if (shape_size(new_shape) != t.size()) {
        throw ShapeError("reshape " + shape_str(t.shape()) + " -> " + shape_str(new_shape) +
                         " changes element count");
    }
    Tensor result = make_result(std::move(new_shape), {t.values().begin(), t.values().end()});
    auto td = t.data(), od = result.data();
    maybe_record(result, wants_grad(td), [td, od]() {
        if (od->grad.empty()) return;
        auto& gt = grad_of(*td);
        for (size_t i = 0; i < od->grad.size(); ++i) gt[i] += od->grad[i];
    });
    return result;
}

Tensor upsample_nearest2x(const Tensor& t) {
    if (t.shape().size() != 4) {
        throw ShapeError("upsample_nearest2x expects 4-d input, got " + shape_str(t.shape()));
    }
    const int b = t.shape()[0], c = t.shape()[1], h = t.shape()[2], w = t.shape()[3];
    const auto& tv = t.data()->values;
    std::vector<double> out((size_t)b * c * 4 * h * w);
    const int oh = 2 * h, ow = 2 * w;
    for (int64_t p = 0; p < (int64_t)b * c; ++p) {
        const double* ip = tv.data() + p * h * w;
        double* op = out.data() + p * oh * ow;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) op[y * ow + x] = ip[(y / 2) * w + (x / 2)];
        }
    }
    Tensor result = make_result({b, c, oh, ow}, std::move(out));
    auto td = t.data(), od = result.data();
    maybe_record(result, wants_grad(td), [td, od, b, c, h, w, oh, ow]() {
        if (od->grad.empty()) return;
        const auto& g = od->grad;
        auto& gt = grad_of(*td);
        for (int64_t p = 0; p < (int64_t)b * c; ++p) {
            const double* gp = g.data() + p * oh * ow;
            double* tp = gt.data() + p * h * w;
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) tp[(y / 2) * w + (x / 2)] += gp[y * ow + x];
            }
        }
    });
    return result;
}

Tensor stack_columns(const std::vector<Tensor>& columns) {
    if (columns.empty()) throw ValueError("stack_columns needs at least one column");
    const Shape& first = columns.front().shape();
    if (first.size() != 1) {
        throw ShapeError("stack_columns expects rank-1 columns, got " + shape_str(first));
    }
    const int b = first[0];
    const int k = (int)columns.size();
    bool any_tracked = false;
    for (const auto& col : columns) {
        if (col.shape() != first) {
            throw ShapeError("stack_columns shape mismatch: " + shape_str(first) + " vs " +
                             shape_str(col.shape()));
        }
        any_tracked = any_tracked || wants_grad(col.data());
    }
    std::vector<double> out((size_t)b * k);
    for (int j = 0; j < k; ++j) {
        const auto& cv = columns[j].data()->values;
        for (int i = 0; i < b; ++i) out[(size_t)i * k + j] = cv[i];
    }
    Tensor result = make_result({b, k}, std::move(out));
    std::vector<DataPtr> cds;
    cds.reserve(columns.size());
    for (const auto& col : columns) cds.push_back(col.data());
    auto od = result.data();
    maybe_record(result, any_tracked, [cds, od, b, k]() {
        if (od->grad.empty()) return;
        const auto& g = od->grad;
        for (int j = 0; j < k; ++j) {
            if (!cds[j]->requires_grad) continue;
            auto& gc = grad_of(*cds[j]);
            for (int i = 0; i < b; ++i) gc[i] += g[(size_t)i * k + j];
        }
    });
    return result;
}

std::vector<double> finite_diff_grad(const std::function<double(const Tensor&)>& f,
                                     const Tensor& t, double eps) {
    if (!(eps > 0.0)) throw ValueError("finite_diff_grad needs eps > 0");
    // Suspend any open tape: the oracle must not touch autodiff state.
    Tape* saved = t_active_tape;
    t_active_tape = nullptr;
    std::vector<double> base(t.values().begin(), t.values().end());
    std::vector<double> g(base.size());
    for (size_t i = 0; i < base.size(); ++i) {
        std::vector<double> v = base;
        v[i] = base[i] + eps;
        const double fp = f(Tensor::from_values(t.shape(), std::move(v)));
        v = base;
        v[i] = base[i] - eps;
        const double fm = f(Tensor::from_values(t.shape(), std::move(v)));
        g[i] = (fp - fm) / (2.0 * eps);
    }
    t_active_tape = saved;
    return g;
}

}  // namespace mcan
