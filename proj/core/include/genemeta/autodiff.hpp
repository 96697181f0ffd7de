#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "genemeta/tensor.hpp"

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape records every operation applied to its Vars in creation order, so
// parents always precede children and a single reverse sweep suffices. One
// tape is meant to live for exactly one forward/backward cycle; drop it
// afterwards. Tapes are not thread-safe, but independent tapes may be used
// concurrently.
namespace genemeta::ad {

class Tape;
class GradSink;

// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Result of Tape::backward. Nodes the loss does not depend on read as zeros.
class Gradients {
 public:
  Tensor operator[](Var v) const;
  bool reached(Var v) const;

 private:
  friend class Tape;
  std::vector<Tensor> grads_;
};

// Propagates d(loss)/d(output) of one node into its parents.
using BackwardFn = std::function<void(const Tensor& grad_out, GradSink& sink)>;

class GradSink {
 public:
  // Accumulator for `parent`, zero-initialised on first use; nullptr when the
  // parent does not require a gradient.
  Tensor* slot(Var parent);

 private:
  friend class Tape;
  GradSink(Tape& tape, std::vector<Tensor>& grads) : tape_(tape), grads_(grads) {}
  Tape& tape_;
  std::vector<Tensor>& grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable leaf.
  Var variable(Tensor value);
  // Leaf that never receives a gradient.
  Var constant(Tensor value);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Used by operations. The new node requires a gradient iff any parent does;
  // `backward` is dropped otherwise.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);

  // Reverse sweep from a scalar loss. Throws ContractError for non-scalars.
  Gradients backward(Var loss);

  // Smallest distance, over differentiable inputs, to a point where an
  // operation has no derivative: leaky_relu at 0 and ties inside a max_pool1d
  // window. Infinity when no such operation was recorded.
  double kink_margin() const noexcept { return kink_margin_; }
  void note_kink_distance(double distance) noexcept;

 private:
  friend class GradSink;
  struct Node {
    Tensor value;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  double kink_margin_ = std::numeric_limits<double>::infinity();
};

// Matrix product. Supports [m,k]x[k,n], batched [b,m,k]x[b,k,n] and
// broadcast [b,m,k]x[k,n].
Var matmul(Var a, Var b);
// Affine map over the last axis: x[..., in] * w[out, in]^T (+ bias[out]).
Var linear(Var x, Var w, std::optional<Var> bias = std::nullopt);
// Swaps the last two axes.
Var transpose(Var a);
Var reshape(Var a, Shape shape);

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

Var leaky_relu(Var x, double slope = 0.01);
Var sigmoid(Var x);
Var softmax(Var x, std::size_t axis);

// Cross-correlation with zero padding. x is [c_in, L] or [batch, c_in, L];
// w is [c_out, c_in, p].
Var conv1d(Var x, Var w, std::size_t stride, std::size_t padding);
// Windowed maximum over the last axis of [c, L] or [batch, c, L]. Ties route
// the gradient to the lowest index in the window.
Var max_pool1d(Var x, std::size_t window, std::size_t stride);

// Zero-pads the last axis up to `length`.
Var pad_last(Var x, std::size_t length);
Var mean(Var x, std::size_t axis);
Var sum(Var x);

// Mean binary cross-entropy. Predictions are clamped to
// [kBceClamp, 1 - kBceClamp] before the logarithm.
inline constexpr double kBceClamp = 1e-7;
Var bce_loss(Var pred, Var label);

}  // namespace genemeta::ad
