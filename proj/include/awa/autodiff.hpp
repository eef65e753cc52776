// Copyright 2026 The AWA Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AWA_AUTODIFF_HPP_
#define AWA_AUTODIFF_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "awa/kernels.hpp"
#include "awa/tensor.hpp"

// Reverse-mode automatic differentiation on an explicit tape.
//
// Every backward rule is itself written with the differentiable primitives
// below, so gradients computed with create_graph = true are ordinary tape
// values and can be differentiated again. This is what lets the attack take
// d/dX of a loss built from d/dtheta of the training loss.
//
// A Tape and the Vars that point into it are a single-owner unit. Distinct
// tapes share nothing and may be used from different threads.
namespace awa::ad {

enum class Op : std::uint8_t {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kMatmul,
  kTranspose,
  kConv2d,
  kConv2dInputGrad,
  kConv2dWeightGrad,
  kRelu,
  kChannelSum,
  kChannelBroadcast,
  kReshape,
  kRsqrt,
  kSoftmaxRows,
  kLogSumExpRows,
  kSumOfSquares,
};

const char* op_name(Op op);

class Tape;

// Handle to one tape node.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t numel() const { return value().numel(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

struct Node {
  Op op = Op::kConstant;
  std::uint8_t num_inputs = 0;
  bool requires_grad = false;
  std::size_t inputs[2] = {0, 0};
  Tensor value;
  // Op-specific attributes.
  double alpha = 0.0;
  std::size_t outer = 0, channels = 0, inner = 0;
  Shape aux_shape;
  kernels::ConvGeometry conv;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiation target.
  Var variable(Tensor value);
  // Never differentiated.
  Var constant(Tensor value);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_[id]; }

  // While false, newly recorded nodes never require grad.
  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool on) { grad_enabled_ = on; }

  Var record(Node node);

 private:
  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
};

class NoGradGuard {
 public:
  explicit NoGradGuard(Tape& tape, bool disable = true)
      : tape_(tape), previous_(tape.grad_enabled()) {
    if (disable) tape_.set_grad_enabled(false);
  }
  ~NoGradGuard() { tape_.set_grad_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape& tape_;
  bool previous_;
};

// ---- primitives -----------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var matmul(Var a, Var b);  // [m,k] x [k,n]
Var transpose(Var a);      // rank-2
Var conv2d(Var x, Var w, std::size_t stride, std::size_t padding);
Var relu(Var a);
// Views `a` as [outer, channels, inner] and sums over outer and inner.
Var channel_sum(Var a, std::size_t outer, std::size_t channels,
                std::size_t inner, Shape out_shape);
// Inverse view of channel_sum: replicates b[channels] to `out_shape`.
Var channel_broadcast(Var b, std::size_t outer, std::size_t inner,
                      Shape out_shape);
Var reshape(Var a, Shape shape);
Var rsqrt(Var a);
Var softmax_rows(Var a);       // rank-2, per row
Var logsumexp_rows(Var a);     // rank-2 -> [rows]
Var sum_of_squares(Var a);     // scalar

// ---- composites -----------------------------------------------------------

Var sum(Var a);
Var mean(Var a);
// x: [N,C,H,W] or [N,C]; gamma, beta: [C]. Batch statistics only.
Var batch_norm_train(Var x, Var gamma, Var beta, double eps = 1e-5);
// logits, targets: [M,K]; targets rows are probability vectors.
// Returns the mean over rows of -sum_j t_ij log softmax(z_i)_j.
Var softmax_cross_entropy(Var logits, Var targets);

// ---- differentiation ------------------------------------------------------

struct GradResult {
  std::vector<Var> grads;
  // Indices into wrt whose gradient is identically zero because `output`
  // does not depend on them.
  std::vector<std::size_t> unreachable;
};

GradResult grad(Var output, std::span<const Var> wrt, bool create_graph);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f,
                            const Tensor& x, double step);

}  // namespace awa::ad

#endif  // AWA_AUTODIFF_HPP_
