#pragma once

// Tape-based reverse-mode differentiation over Tensor values.
//
// A Tape records nodes in creation order, which is a topological order.
// backward() walks them once in reverse and adds each parameter leaf's
// gradient into its Param. Shapes never broadcast, except that scale()
// multiplies by a plain double and affine() adds a bias row.
//
// Kinks: relu treats x = 0 as inactive, maximum() breaks ties toward the
// earlier argument. The tape keeps the smallest distance to any kink seen
// and a hash of every branch taken, so finite-difference checks can tell
// when a perturbation crossed one.

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "gazelab/tensor.hpp"

namespace gazelab {

/// Trainable tensor with its gradient accumulator and momentum buffer.
struct Param {
    Tensor value;
    Tensor grad;
    Tensor momentum;
    /// Weights take part in weight decay, biases do not.
    bool decay = true;

    Param() = default;
    explicit Param(Tensor v, bool decays = true);
    void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    double item() const { return value().item(); }
    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Leaf bound to `p`. Repeated calls return the same node, so a
    /// parameter used in several places has exactly one leaf.
    Var param(Param& p);

    /// Adds d(root)/d(param) into every bound Param::grad. Root must hold a
    /// single value.
    void backward(Var root);

    std::size_t size() const { return nodes_.size(); }
    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    /// Gradient slot of a node, allocated as zeros on first use.
    Tensor& grad(std::size_t id);
    bool has_grad(std::size_t id) const { return nodes_[id].grad.has_value(); }
    /// False for constants and nodes computed only from constants.
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    /// Gradient of a node after backward(); zeros if nothing reached it.
    Tensor grad_of(Var v) const;

    /// Records an op output. `parents` are node ids; `fn` adds this node's
    /// gradient into the parents' slots. Throws NonFiniteValue on NaN/Inf.
    Var push(const char* op, Tensor value, std::vector<std::size_t> parents, BackwardFn fn);

    /// Smallest |relu input| or max-tie gap recorded so far.
    double min_kink_distance() const { return min_kink_; }
    /// Hash of every branch decision (relu masks, max winners).
    std::uint64_t branch_signature() const { return signature_; }
    void note_kink(double distance);
    void note_branch(std::uint64_t token);

private:
    struct Node {
        Tensor value;
        std::optional<Tensor> grad;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        Param* param = nullptr;
        bool requires_grad = false;
    };

    std::deque<Node> nodes_;  // stable references across push()
    std::unordered_map<const Param*, std::size_t> param_nodes_;
    double min_kink_ = std::numeric_limits<double>::infinity();
    std::uint64_t signature_ = 1469598103934665603ull;
};

namespace ad {

/// [m, k] x [k, n] -> [m, n]
Var matmul(Var a, Var b);
/// x [m, k] times w [k, n] plus bias [n] on every row.
Var affine(Var x, Var w, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
Var sin(Var a);
Var cos(Var a);
/// Concatenates rank-2 tensors with equal row counts along columns.
Var concat(const std::vector<Var>& parts);
/// Columns [begin, end) of a rank-2 tensor.
Var slice_cols(Var a, std::size_t begin, std::size_t end);
/// Mean of all elements, as a scalar.
Var reduce_mean(Var a);
Var reduce_sum(Var a);
/// Elementwise maximum across equally shaped tensors; ties go to the
/// earliest argument.
Var maximum(const std::vector<Var>& parts);
/// Elementwise mean across equally shaped tensors, computed as
/// x0 + sum_i (x_i - x0) / n so that identical inputs come back unchanged.
Var mean_of(const std::vector<Var>& parts);
/// Sum of squared elements, as a scalar.
Var sq_l2(Var a);
/// Mean over rows of the squared row distance: sum((a - b)^2) / rows.
Var mse(Var a, Var b);
/// Row-wise cross product of [B, 3] tensors.
Var cross3(Var a, Var b);
/// Row-wise dot product of [B, 3] tensors, shape [B, 1].
Var dot3(Var a, Var b);

}  // namespace ad

}  // namespace gazelab
