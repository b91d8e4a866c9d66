// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over dense n-dimensional tensors of
// 64-bit reals. Ops record backward rules onto a thread-local active Tape
// (opened with TapeScope); without an open tape they are pure functions,
// which is the inference path. Gradients accumulate with += semantics and
// are cleared explicitly via zero_grad().

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcan {

using Shape = std::vector<int>;

int64_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

class Tape;

struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty = no gradient accumulated yet (treated as zeros)
    bool requires_grad = false;
    int node_id = -1;           // output slot on `tape`, -1 for leaves
    const Tape* tape = nullptr;
};

class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from_values(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);

    bool defined() const { return data_ != nullptr; }
    const Shape& shape() const { return data_->shape; }
    int64_t size() const { return (int64_t)data_->values.size(); }
    std::span<const double> values() const { return data_->values; }
    // Leaf mutation (optimizer steps, test setup). Never call on a tensor
    // that is an op output of a live tape.
    std::vector<double>& raw_values() { return data_->values; }
    double item() const;

    bool requires_grad() const { return data_->requires_grad; }
    Tensor& set_requires_grad(bool v) {
        data_->requires_grad = v;
        return *this;
    }
    bool has_grad() const { return !data_->grad.empty(); }
    std::span<const double> grad() const;
    std::vector<double>& grad_ref();  // allocates zeros on first touch
    void zero_grad();

    int node_id() const { return data_->node_id; }
    const std::shared_ptr<TensorData>& data() const { return data_; }

  private:
    explicit Tensor(std::shared_ptr<TensorData> d) : data_(std::move(d)) {}
    std::shared_ptr<TensorData> data_;

    friend class Tape;
};

// Ordered record of operations; replaying it in reverse propagates gradients
// from a scalar loss to every requires_grad tensor that fed it.
class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Registers an op output and its backward rule. Returns the node id.
    int record(const std::shared_ptr<TensorData>& output, std::function<void()> rule);

    // Seeds d(loss)/d(loss) = 1 and replays all rules in reverse order.
    // The loss must be a scalar recorded on this tape.
    void backward(const Tensor& loss);

    size_t size() const { return rules_.size(); }
    void clear() { rules_.clear(); }

  private:
    std::vector<std::function<void()>> rules_;
};

// RAII: makes `tape` the active recorder on this thread.
class TapeScope {
  public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

  private:
    Tape* previous_;
};

Tape* active_tape();

// --- primitive ops ---------------------------------------------------------

enum class EwiseKind { add, sub, mul };

// Elementwise op; b may be broadcast against a by singleton dimensions
// (right-aligned, numpy style). Output has a's shape.
Tensor elementwise(EwiseKind kind, const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& t, double c);
Tensor mul_scalar(const Tensor& t, double c);

Tensor log(const Tensor& t);
Tensor clamp(const Tensor& t, double lo, double hi);
Tensor sigmoid(const Tensor& t);
Tensor relu(const Tensor& t);

Tensor matmul(const Tensor& a, const Tensor& b);

// 2-d cross-correlation, NCHW layout, square stride/dilation/padding.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride,
              int dilation, int padding);

enum class ReduceKind { sum, mean };

// axes = nullopt reduces everything to a rank-0 scalar; otherwise the listed
// axes are removed from the shape.
Tensor reduce(ReduceKind kind, const Tensor& t, const std::optional<std::vector<int>>& axes);
Tensor reduce_sum(const Tensor& t);
Tensor reduce_mean(const Tensor& t);

Tensor reshape(const Tensor& t, Shape new_shape);

// [B,C,H,W] -> [B,C,2H,2W], each value replicated into a 2x2 block.
Tensor upsample_nearest2x(const Tensor& t);

// K tensors of shape [B] -> one [B,K] tensor.
Tensor stack_columns(const std::vector<Tensor>& columns);

// Central finite differences (f(t+eps*e_i) - f(t-eps*e_i)) / (2*eps) per
// element. Test oracle: evaluates f only, never the tape.
std::vector<double> finite_diff_grad(const std::function<double(const Tensor&)>& f,
                                     const Tensor& t, double eps);

}  // namespace mcan
