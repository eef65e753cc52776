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

#include "awa/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace awa::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kConstant: return "constant";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kMatmul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kConv2d: return "conv2d";
    case Op::kConv2dInputGrad: return "conv2d_input_grad";
    case Op::kConv2dWeightGrad: return "conv2d_weight_grad";
    case Op::kRelu: return "relu";
    case Op::kChannelSum: return "channel_sum";
    case Op::kChannelBroadcast: return "channel_broadcast";
    case Op::kReshape: return "reshape";
    case Op::kRsqrt: return "rsqrt";
    case Op::kSoftmaxRows: return "softmax_rows";
    case Op::kLogSumExpRows: return "logsumexp_rows";
    case Op::kSumOfSquares: return "sum_of_squares";
  }
  return "unknown";
}

const Tensor& Var::value() const { return tape_->node(id_).value; }

bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

Var Tape::variable(Tensor value) {
  Node n;
  n.op = Op::kLeaf;
  n.requires_grad = true;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Node n) {
  bool rg = false;
  if (grad_enabled_) {
    for (std::uint8_t i = 0; i < n.num_inputs; ++i) {
      rg = rg || nodes_[n.inputs[i]].requires_grad;
    }
  }
  n.requires_grad = rg;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

namespace {

[[noreturn]] void shape_fail(const char* op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

Tape& common_tape(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid()) shape_fail(op, "uninitialized operand");
  if (a.tape() != b.tape()) shape_fail(op, "operands live on different tapes");
  return *a.tape();
}

Tape& tape_of(const char* op, Var a) {
  if (!a.valid()) shape_fail(op, "uninitialized operand");
  return *a.tape();
}

Node unary(Op op, Var a, Tensor value) {
  Node n;
  n.op = op;
  n.num_inputs = 1;
  n.inputs[0] = a.id();
  n.value = std::move(value);
  return n;
}

Node binary(Op op, Var a, Var b, Tensor value) {
  Node n;
  n.op = op;
  n.num_inputs = 2;
  n.inputs[0] = a.id();
  n.inputs[1] = b.id();
  n.value = std::move(value);
  return n;
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    shape_fail(op, "operand shapes differ " + shape_string(a.shape()) +
                       " vs " + shape_string(b.shape()));
  }
}

template <typename F>
Var elementwise2(Op op, const char* name, Var a, Var b, F f) {
  Tape& t = common_tape(name, a, b);
  require_same_shape(name, a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(av[i], bv[i]);
  return t.record(binary(op, a, b, std::move(out)));
}

Var conv_forward_raw(Var x, Var w, const kernels::ConvGeometry& g) {
  Tape& t = common_tape("conv2d", x, w);
  Tensor out(Shape{g.batch, g.out_channels, g.out_h(), g.out_w()});
  kernels::conv2d(g, x.value().data(), w.value().data(), out.data());
  Node n = binary(Op::kConv2d, x, w, std::move(out));
  n.conv = g;
  return t.record(std::move(n));
}

Var conv_input_grad_raw(Var gy, Var w, const kernels::ConvGeometry& g) {
  Tape& t = common_tape("conv2d_input_grad", gy, w);
  Tensor out(Shape{g.batch, g.in_channels, g.height, g.width});
  kernels::conv2d_input_grad(g, gy.value().data(), w.value().data(),
                             out.data());
  Node n = binary(Op::kConv2dInputGrad, gy, w, std::move(out));
  n.conv = g;
  return t.record(std::move(n));
}

Var conv_weight_grad_raw(Var x, Var gy, const kernels::ConvGeometry& g) {
  Tape& t = common_tape("conv2d_weight_grad", x, gy);
  Tensor out(Shape{g.out_channels, g.in_channels, g.kernel_h, g.kernel_w});
  kernels::conv2d_weight_grad(g, x.value().data(), gy.value().data(),
                              out.data());
  Node n = binary(Op::kConv2dWeightGrad, x, gy, std::move(out));
  n.conv = g;
  return t.record(std::move(n));
}

}  // namespace

// ---- primitives -----------------------------------------------------------

Var add(Var a, Var b) {
  return elementwise2(Op::kAdd, "add", a, b,
                      [](double x, double y) { return x + y; });
}

Var sub(Var a, Var b) {
  return elementwise2(Op::kSub, "sub", a, b,
                      [](double x, double y) { return x - y; });
}

Var mul(Var a, Var b) {
  return elementwise2(Op::kMul, "mul", a, b,
                      [](double x, double y) { return x * y; });
}

Var scale(Var a, double s) {
  Tape& t = tape_of("scale", a);
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  Node n = unary(Op::kScale, a, std::move(out));
  n.alpha = s;
  return t.record(std::move(n));
}

Var add_scalar(Var a, double s) {
  Tape& t = tape_of("add_scalar", a);
  Tensor out = a.value();
  for (double& v : out.data()) v += s;
  Node n = unary(Op::kAddScalar, a, std::move(out));
  n.alpha = s;
  return t.record(std::move(n));
}

Var matmul(Var a, Var b) {
  Tape& t = common_tape("matmul", a, b);
  if (a.value().rank() != 2 || b.value().rank() != 2) {
    shape_fail("matmul", "operands must be rank 2, got " +
                             shape_string(a.shape()) + " and " +
                             shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    shape_fail("matmul", "inner dimensions differ (" + std::to_string(k) +
                             " vs " + std::to_string(b.shape()[0]) + ")");
  }
  Tensor out(Shape{m, n});
  kernels::matmul(a.value().data(), b.value().data(), out.data(), m, k, n);
  return t.record(binary(Op::kMatmul, a, b, std::move(out)));
}

Var transpose(Var a) {
  Tape& t = tape_of("transpose", a);
  if (a.value().rank() != 2) {
    shape_fail("transpose", "operand must be rank 2, got " +
                                shape_string(a.shape()));
  }
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  const Tensor& av = a.value();
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return t.record(unary(Op::kTranspose, a, std::move(out)));
}

Var conv2d(Var x, Var w, std::size_t stride, std::size_t padding) {
  common_tape("conv2d", x, w);
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.size() != 4 || ws.size() != 4) {
    shape_fail("conv2d", "expected rank-4 input and kernel, got " +
                             shape_string(xs) + " and " + shape_string(ws));
  }
  if (xs[1] != ws[1]) {
    shape_fail("conv2d", "input channels " + std::to_string(xs[1]) +
                             " do not match kernel channels " +
                             std::to_string(ws[1]));
  }
  if (stride == 0) shape_fail("conv2d", "stride must be positive");
  if (xs[2] + 2 * padding < ws[2] || xs[3] + 2 * padding < ws[3]) {
    shape_fail("conv2d", "kernel " + shape_string(ws) +
                             " larger than padded input " + shape_string(xs));
  }
  kernels::ConvGeometry g;
  g.batch = xs[0];
  g.in_channels = xs[1];
  g.height = xs[2];
  g.width = xs[3];
  g.out_channels = ws[0];
  g.kernel_h = ws[2];
  g.kernel_w = ws[3];
  g.stride = stride;
  g.padding = padding;
  return conv_forward_raw(x, w, g);
}

Var relu(Var a) {
  Tape& t = tape_of("relu", a);
  Tensor out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return t.record(unary(Op::kRelu, a, std::move(out)));
}

Var channel_sum(Var a, std::size_t outer, std::size_t channels,
                std::size_t inner, Shape out_shape) {
  Tape& t = tape_of("channel_sum", a);
  if (a.numel() != outer * channels * inner) {
    shape_fail("channel_sum", "cannot view " + shape_string(a.shape()) +
                                  " as [" + std::to_string(outer) + "," +
                                  std::to_string(channels) + "," +
                                  std::to_string(inner) + "]");
  }
  if (shape_numel(out_shape) != channels) {
    shape_fail("channel_sum", "output shape " + shape_string(out_shape) +
                                  " does not hold " +
                                  std::to_string(channels) + " channels");
  }
  const Tensor& av = a.value();
  Tensor out(std::move(out_shape));
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < channels; ++c) {
      const double* p = av.data().data() + (o * channels + c) * inner;
      double s = 0.0;
      for (std::size_t i = 0; i < inner; ++i) s += p[i];
      out[c] += s;
    }
  Node n = unary(Op::kChannelSum, a, std::move(out));
  n.outer = outer;
  n.channels = channels;
  n.inner = inner;
  return t.record(std::move(n));
}

Var channel_broadcast(Var b, std::size_t outer, std::size_t inner,
                      Shape out_shape) {
  Tape& t = tape_of("channel_broadcast", b);
  const std::size_t channels = b.numel();
  if (shape_numel(out_shape) != outer * channels * inner) {
    shape_fail("channel_broadcast",
               "output shape " + shape_string(out_shape) +
                   " does not hold [" + std::to_string(outer) + "," +
                   std::to_string(channels) + "," + std::to_string(inner) +
                   "]");
  }
  const Tensor& bv = b.value();
  Tensor out(std::move(out_shape));
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < channels; ++c) {
      double* p = out.data().data() + (o * channels + c) * inner;
      std::fill(p, p + inner, bv[c]);
    }
  Node n = unary(Op::kChannelBroadcast, b, std::move(out));
  n.outer = outer;
  n.channels = channels;
  n.inner = inner;
  return t.record(std::move(n));
}

Var reshape(Var a, Shape shape) {
  Tape& t = tape_of("reshape", a);
  if (shape_numel(shape) != a.numel()) {
    shape_fail("reshape", "cannot view " + shape_string(a.shape()) + " as " +
                              shape_string(shape));
  }
  Tensor out = a.value().reshaped(std::move(shape));
  return t.record(unary(Op::kReshape, a, std::move(out)));
}

Var rsqrt(Var a) {
  Tape& t = tape_of("rsqrt", a);
  Tensor out = a.value();
  for (double& v : out.data()) v = 1.0 / std::sqrt(v);
  return t.record(unary(Op::kRsqrt, a, std::move(out)));
}

Var softmax_rows(Var a) {
  Tape& t = tape_of("softmax_rows", a);
  if (a.value().rank() != 2) {
    shape_fail("softmax_rows", "operand must be rank 2, got " +
                                   shape_string(a.shape()));
  }
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  Tensor out = a.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double* p = out.data().data() + r * cols;
    const double mx = *std::max_element(p, p + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      p[c] = std::exp(p[c] - mx);
      s += p[c];
    }
    for (std::size_t c = 0; c < cols; ++c) p[c] /= s;
  }
  return t.record(unary(Op::kSoftmaxRows, a, std::move(out)));
}

Var logsumexp_rows(Var a) {
  Tape& t = tape_of("logsumexp_rows", a);
  if (a.value().rank() != 2) {
    shape_fail("logsumexp_rows", "operand must be rank 2, got " +
                                     shape_string(a.shape()));
  }
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  const Tensor& av = a.value();
  Tensor out(Shape{rows});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* p = av.data().data() + r * cols;
    const double mx = *std::max_element(p, p + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(p[c] - mx);
    out[r] = mx + std::log(s);
  }
  return t.record(unary(Op::kLogSumExpRows, a, std::move(out)));
}

Var sum_of_squares(Var a) {
  Tape& t = tape_of("sum_of_squares", a);
  double s = 0.0;
  for (double v : a.value().data()) s += v * v;
  return t.record(unary(Op::kSumOfSquares, a, Tensor::scalar(s)));
}

// ---- composites -----------------------------------------------------------

Var sum(Var a) { return channel_sum(a, 1, 1, a.numel(), Shape{}); }

Var mean(Var a) {
  const std::size_t n = a.numel();
  if (n == 0) shape_fail("mean", "empty operand");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var batch_norm_train(Var x, Var gamma, Var beta, double eps) {
  const Shape xs = x.shape();
  if (xs.size() != 2 && xs.size() != 4) {
    shape_fail("batch_norm_train", "expected [N,C] or [N,C,H,W], got " +
                                       shape_string(xs));
  }
  const std::size_t outer = xs[0], channels = xs[1];
  const std::size_t inner = xs.size() == 4 ? xs[2] * xs[3] : 1;
  if (gamma.numel() != channels || beta.numel() != channels) {
    shape_fail("batch_norm_train",
               "scale/shift hold " + std::to_string(gamma.numel()) + "/" +
                   std::to_string(beta.numel()) + " values for " +
                   std::to_string(channels) + " channels");
  }
  const std::size_t count = outer * inner;
  if (count < 2) {
    shape_fail("batch_norm_train",
               "needs at least 2 values per channel, got " +
                   std::to_string(count));
  }
  const double inv_count = 1.0 / static_cast<double>(count);
  const Shape cshape{channels};
  Var mu = scale(channel_sum(x, outer, channels, inner, cshape), inv_count);
  Var centered = sub(x, channel_broadcast(mu, outer, inner, xs));
  Var var = scale(channel_sum(mul(centered, centered), outer, channels, inner,
                              cshape),
                  inv_count);
  Var inv_std = rsqrt(add_scalar(var, eps));
  Var normalized = mul(centered, channel_broadcast(inv_std, outer, inner, xs));
  return add(mul(normalized, channel_broadcast(gamma, outer, inner, xs)),
             channel_broadcast(beta, outer, inner, xs));
}

Var softmax_cross_entropy(Var logits, Var targets) {
  common_tape("softmax_cross_entropy", logits, targets);
  if (logits.value().rank() != 2) {
    shape_fail("softmax_cross_entropy", "logits must be [M,K], got " +
                                            shape_string(logits.shape()));
  }
  require_same_shape("softmax_cross_entropy", logits, targets);
  const double rows = static_cast<double>(logits.shape()[0]);
  Var lse = sum(logsumexp_rows(logits));
  Var dot = sum(mul(targets, logits));
  return scale(sub(lse, dot), 1.0 / rows);
}

// ---- differentiation ------------------------------------------------------

namespace {

struct Backward {
  Tape& tape;
  std::vector<std::optional<Var>>& grads;
  const std::vector<char>& dep;

  void accumulate(std::size_t id, Var contribution) {
    auto& slot = grads[id];
    slot = slot ? add(*slot, contribution) : contribution;
  }

  bool needs(std::size_t id) const { return dep[id] != 0; }

  void run(std::size_t id, Var g) {
    // Copy the attributes: recording new nodes may reallocate the tape.
    const Node& nref = tape.node(id);
    const Op op = nref.op;
    const std::size_t in0 = nref.inputs[0], in1 = nref.inputs[1];
    const double alpha = nref.alpha;
    const std::size_t outer = nref.outer, channels = nref.channels,
                      inner = nref.inner;
    const kernels::ConvGeometry conv = nref.conv;
    Var a(&tape, in0), b(&tape, in1), self(&tape, id);

    switch (op) {
      case Op::kLeaf:
      case Op::kConstant:
        return;
      case Op::kAdd:
        if (needs(in0)) accumulate(in0, g);
        if (needs(in1)) accumulate(in1, g);
        return;
      case Op::kSub:
        if (needs(in0)) accumulate(in0, g);
        if (needs(in1)) accumulate(in1, scale(g, -1.0));
        return;
      case Op::kMul:
        if (needs(in0)) accumulate(in0, mul(g, b));
        if (needs(in1)) accumulate(in1, mul(g, a));
        return;
      case Op::kScale:
        if (needs(in0)) accumulate(in0, scale(g, alpha));
        return;
      case Op::kAddScalar:
        if (needs(in0)) accumulate(in0, g);
        return;
      case Op::kMatmul:
        if (needs(in0)) accumulate(in0, matmul(g, transpose(b)));
        if (needs(in1)) accumulate(in1, matmul(transpose(a), g));
        return;
      case Op::kTranspose:
        if (needs(in0)) accumulate(in0, transpose(g));
        return;
      case Op::kConv2d:
        // y = conv(x, w)
        if (needs(in0)) accumulate(in0, conv_input_grad_raw(g, b, conv));
        if (needs(in1)) accumulate(in1, conv_weight_grad_raw(a, g, conv));
        return;
      case Op::kConv2dInputGrad:
        // gx = conv_dx(gy, w); all three conv maps are the partial
        // derivatives of the trilinear form <conv(x, w), gy>.
        if (needs(in0)) accumulate(in0, conv_forward_raw(g, b, conv));
        if (needs(in1)) accumulate(in1, conv_weight_grad_raw(g, a, conv));
        return;
      case Op::kConv2dWeightGrad:
        // gw = conv_dw(x, gy)
        if (needs(in0)) accumulate(in0, conv_input_grad_raw(b, g, conv));
        if (needs(in1)) accumulate(in1, conv_forward_raw(a, g, conv));
        return;
      case Op::kRelu: {
        if (!needs(in0)) return;
        Tensor mask(a.shape());
        const Tensor& av = a.value();
        for (std::size_t i = 0; i < mask.numel(); ++i) {
          mask[i] = av[i] > 0.0 ? 1.0 : 0.0;
        }
        accumulate(in0, mul(g, tape.constant(std::move(mask))));
        return;
      }
      case Op::kChannelSum:
        if (needs(in0)) {
          accumulate(in0, channel_broadcast(g, outer, inner, a.shape()));
        }
        return;
      case Op::kChannelBroadcast:
        if (needs(in0)) {
          accumulate(in0, channel_sum(g, outer, channels, inner, a.shape()));
        }
        return;
      case Op::kReshape:
        if (needs(in0)) accumulate(in0, reshape(g, a.shape()));
        return;
      case Op::kRsqrt:
        // d/da a^(-1/2) = -1/2 a^(-3/2) = -1/2 r^3
        if (needs(in0)) {
          accumulate(in0, mul(g, scale(mul(self, mul(self, self)), -0.5)));
        }
        return;
      case Op::kSoftmaxRows: {
        if (!needs(in0)) return;
        const Shape s = a.shape();
        const std::size_t rows = s[0], cols = s[1];
        Var row_dot = channel_sum(mul(g, self), 1, rows, cols, Shape{rows});
        accumulate(in0, mul(self, sub(g, channel_broadcast(row_dot, 1, cols,
                                                           s))));
        return;
      }
      case Op::kLogSumExpRows: {
        if (!needs(in0)) return;
        const Shape s = a.shape();
        accumulate(in0,
                   mul(channel_broadcast(g, 1, s[1], s), softmax_rows(a)));
        return;
      }
      case Op::kSumOfSquares:
        if (needs(in0)) {
          const Shape s = a.shape();
          accumulate(in0, mul(channel_broadcast(g, 1, shape_numel(s), s),
                              scale(a, 2.0)));
        }
        return;
    }
  }
};

}  // namespace

GradResult grad(Var output, std::span<const Var> wrt, bool create_graph) {
  if (!output.valid()) throw std::invalid_argument("grad: invalid output");
  if (output.numel() != 1) {
    throw ShapeError("grad: output must be a scalar, got shape " +
                     shape_string(output.shape()));
  }
  Tape& tape = *output.tape();
  const std::size_t out_id = output.id();

  std::size_t first = out_id + 1;
  for (const Var& w : wrt) {
    if (w.tape() != &tape) {
      throw std::invalid_argument("grad: wrt tensor lives on another tape");
    }
    if (!w.requires_grad()) {
      throw std::invalid_argument(
          "grad: wrt tensor does not require grad (node " +
          std::to_string(w.id()) + ")");
    }
    first = std::min(first, w.id());
  }

  // dep[i]: node i is on a path from some wrt tensor.
  std::vector<char> dep(out_id + 1, 0);
  for (const Var& w : wrt) {
    if (w.id() <= out_id) dep[w.id()] = 1;
  }
  for (std::size_t i = first; i <= out_id; ++i) {
    if (dep[i]) continue;
    const Node& n = tape.node(i);
    if (!n.requires_grad) continue;
    for (std::uint8_t k = 0; k < n.num_inputs; ++k) {
      if (n.inputs[k] >= first && dep[n.inputs[k]]) {
        dep[i] = 1;
        break;
      }
    }
  }

  GradResult result;
  std::vector<std::optional<Var>> grads(out_id + 1);
  {
    NoGradGuard guard(tape, !create_graph);
    if (dep[out_id]) {
      grads[out_id] = tape.constant(Tensor(output.shape(), 1.0));
      Backward bw{tape, grads, dep};
      for (std::size_t i = out_id + 1; i-- > first;) {
        if (!dep[i] || !grads[i]) continue;
        bw.run(i, *grads[i]);
      }
    }
    for (std::size_t k = 0; k < wrt.size(); ++k) {
      const std::size_t id = wrt[k].id();
      if (id <= out_id && grads[id]) {
        result.grads.push_back(*grads[id]);
      } else {
        result.grads.push_back(tape.constant(Tensor(wrt[k].shape(), 0.0)));
        result.unreachable.push_back(k);
      }
    }
  }
  return result;
}

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f,
                            const Tensor& x, double step) {
  Tensor g(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double fp = f(probe);
    probe[i] = orig - step;
    const double fm = f(probe);
    probe[i] = orig;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace awa::ad
