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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "awa/autodiff.hpp"
#include "test_util.hpp"

namespace awa::ad {
namespace {

using awa::testing::numeric_grad;
using awa::testing::random_tensor;
using awa::testing::relative_error;
using awa::testing::ScalarFn;
using awa::testing::tape_grad;

constexpr double kFirstOrderTol = 1e-4;

// Random values kept at least `gap` away from zero (relu kinks).
Tensor away_from_zero(Rng& rng, Shape shape, double gap = 1e-2) {
  Tensor t = random_tensor(rng, std::move(shape));
  for (double& v : t.data()) {
    if (std::abs(v) < gap) v = v < 0 ? -gap - 0.1 : gap + 0.1;
  }
  return t;
}

void expect_fd_match(const ScalarFn& f, const Tensor& x,
                     double tol = kFirstOrderTol) {
  const Tensor g = tape_grad(f, x);
  const Tensor n = numeric_grad(f, x);
  EXPECT_LT(relative_error(g, n), tol);
}

// Weighted readout so every output coordinate matters.
Var readout(Tape& t, Var v, std::uint64_t seed = 99) {
  Rng rng(seed);
  Var w = t.constant(random_tensor(rng, v.shape()));
  return sum(mul(v, w));
}

TEST(Autodiff, ForwardExamples) {
  Tape t;
  Var r = relu(t.constant(Tensor::vector({-1, 0, 2})));
  EXPECT_EQ(r.value().storage(), (std::vector<double>{0, 0, 2}));
  EXPECT_DOUBLE_EQ(mean(t.constant(Tensor::vector({2, 4, 6}))).value().item(), 4.0);
  Tensor x(Shape{1, 1, 3, 3});
  for (std::size_t i = 0; i < 9; ++i) x[i] = static_cast<double>(i) - 4.0;
  Var y = conv2d(t.constant(x), t.constant(Tensor(Shape{1, 1, 1, 1}, 1.0)), 1, 0);
  EXPECT_EQ(y.value(), x);
}

TEST(Autodiff, AnalyticFirstAndSecondDerivative) {
  Tape t;
  Var x = t.variable(Tensor::scalar(3.0));
  Var y = mul(x, x);
  GradResult g1 = grad(y, std::span<const Var>(&x, 1), true);
  EXPECT_DOUBLE_EQ(g1.grads[0].value().item(), 6.0);
  GradResult g2 = grad(g1.grads[0], std::span<const Var>(&x, 1), false);
  EXPECT_DOUBLE_EQ(g2.grads[0].value().item(), 2.0);
}

TEST(Autodiff, FiniteDifferenceExamples) {
  const Tensor x = Tensor::vector({1, 2});
  const Tensor g = finite_diff_gradient(
      [](const Tensor& v) { return v[0] * v[0] + v[1] * v[1]; }, x, 1e-5);
  EXPECT_NEAR(g[0], 2.0, 1e-8);
  EXPECT_NEAR(g[1], 4.0, 1e-8);
  const Tensor m = finite_diff_gradient(
      [](const Tensor& v) { return 0.5 * (v[0] + v[1]); }, Tensor::vector({5, 7}),
      1e-5);
  EXPECT_NEAR(m[0], 0.5, 1e-9);
  EXPECT_NEAR(m[1], 0.5, 1e-9);
}

TEST(Autodiff, PrimitiveGradientsMatchFiniteDifferences) {
  Rng rng(2024);
  const Tensor other = random_tensor(rng, Shape{3, 4});
  const Tensor right = random_tensor(rng, Shape{4, 5});
  const Tensor x34 = random_tensor(rng, Shape{3, 4});

  expect_fd_match([&](Tape& t, Var a) { return readout(t, add(a, t.constant(other))); }, x34);
  expect_fd_match([&](Tape& t, Var a) { return readout(t, sub(t.constant(other), a)); }, x34);
  expect_fd_match([&](Tape& t, Var a) { return readout(t, mul(a, a)); }, x34);
  expect_fd_match([&](Tape& t, Var a) { return readout(t, scale(a, -2.5)); }, x34);
  expect_fd_match([&](Tape& t, Var a) { return readout(t, add_scalar(mul(a, a), 0.3)); }, x34);
  expect_fd_match([&](Tape& t, Var a) { return readout(t, matmul(a, t.constant(right))); }, x34);
  expect_fd_match([&](Tape& t, Var a) { return readout(t, matmul(t.constant(right), a)); },
                  random_tensor(rng, Shape{5, 2}));
  expect_fd_match([&](Tape& t, Var a) { return readout(t, transpose(a)); }, x34);
  expect_fd_match([&](Tape& t, Var a) { return readout(t, relu(a)); },
                  away_from_zero(rng, Shape{3, 4}));
  expect_fd_match([&](Tape& t, Var a) {
    return readout(t, channel_sum(a, 3, 2, 2, Shape{2}));
  }, x34);
  expect_fd_match([&](Tape& t, Var a) {
    return readout(t, channel_broadcast(a, 2, 3, Shape{2, 4, 3}));
  }, random_tensor(rng, Shape{4}));
  expect_fd_match([&](Tape& t, Var a) { return readout(t, reshape(a, Shape{2, 6})); }, x34);
  expect_fd_match([&](Tape& t, Var a) { return readout(t, rsqrt(a)); },
                  random_tensor(rng, Shape{5}, 0.5, 2.0));
  expect_fd_match([&](Tape& t, Var a) { return readout(t, softmax_rows(a)); }, x34);
  expect_fd_match([&](Tape& t, Var a) { return readout(t, logsumexp_rows(a)); }, x34);
  expect_fd_match([&](Tape&, Var a) { return sum_of_squares(a); }, x34);
  expect_fd_match([&](Tape&, Var a) { return mean(a); }, x34);
  expect_fd_match([&](Tape& t, Var a) {
    return readout(t, batch_norm_train(a, t.constant(Tensor::vector({1.5, -0.5, 2, 1})),
                                       t.constant(Tensor::vector({0.1, 0.2, 0.3, 0.4}))));
  }, x34);
}

TEST(Autodiff, ConvGradientsMatchFiniteDifferences) {
  Rng rng(77);
  const Tensor x = random_tensor(rng, Shape{2, 2, 5, 4});
  const Tensor w = random_tensor(rng, Shape{3, 2, 3, 2});
  for (std::size_t stride : {1, 2}) {
    for (std::size_t pad : {0, 1}) {
      expect_fd_match([&](Tape& t, Var a) {
        return readout(t, conv2d(a, t.constant(w), stride, pad));
      }, x);
      expect_fd_match([&](Tape& t, Var b) {
        return readout(t, conv2d(t.constant(x), b, stride, pad));
      }, w);
    }
  }
}

TEST(Autodiff, BatchNormGradientWrtScaleAndShift) {
  Rng rng(5);
  const Tensor x = random_tensor(rng, Shape{2, 3, 2, 2});
  expect_fd_match([&](Tape& t, Var g) {
    return readout(t, batch_norm_train(t.constant(x), g, t.constant(Tensor(Shape{3}, 0.2))));
  }, random_tensor(rng, Shape{3}));
  expect_fd_match([&](Tape& t, Var b) {
    return readout(t, batch_norm_train(t.constant(x), t.constant(Tensor(Shape{3}, 1.0)), b));
  }, random_tensor(rng, Shape{3}));
}

TEST(Autodiff, SoftmaxCrossEntropyTightTolerance) {
  Rng rng(8);
  Tensor target(Shape{1, 4});
  target[2] = 1.0;
  const Tensor logits = random_tensor(rng, Shape{1, 4}, -2, 2);
  const ScalarFn f = [&](Tape& t, Var z) {
    return softmax_cross_entropy(z, t.constant(target));
  };
  EXPECT_LT(relative_error(tape_grad(f, logits), numeric_grad(f, logits)), 1e-6);
}

TEST(Autodiff, UniformLogitsGiveLogK) {
  Tape t;
  Tensor target(Shape{1, 10});
  target[3] = 1.0;
  Var loss = softmax_cross_entropy(t.constant(Tensor(Shape{1, 10}, 0.7)),
                                   t.constant(target));
  EXPECT_NEAR(loss.value().item(), std::log(10.0), 1e-12);
}

TEST(Autodiff, ComposedConvReluMeanMatchesFiniteDifferences) {
  Rng rng(123);
  const Tensor w = random_tensor(rng, Shape{2, 1, 3, 3});
  const ScalarFn f = [&](Tape& t, Var x) {
    return mean(relu(conv2d(x, t.constant(w), 1, 1)));
  };
  // Pick an input whose pre-activations stay clear of the kink.
  for (int attempt = 0; attempt < 100; ++attempt) {
    const Tensor x = random_tensor(rng, Shape{1, 1, 4, 4});
    Tape t;
    Var pre = conv2d(t.constant(x), t.constant(w), 1, 1);
    bool clear = true;
    for (double v : pre.value().data()) clear = clear && std::abs(v) > 1e-3;
    if (!clear) continue;
    expect_fd_match(f, x);
    return;
  }
  FAIL() << "no kink-free input found";
}

// f(x) = 0.5 x^T A x + b^T x; grad = A_sym x + b, Hessian-vector = A_sym v.
TEST(Autodiff, SecondOrderMatchesQuadraticHessian) {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    const Tensor A = random_tensor(rng, Shape{n, n});
    const Tensor b = random_tensor(rng, Shape{n, 1});
    const Tensor v = random_tensor(rng, Shape{n, 1});
    Tape t;
    Var x = t.variable(random_tensor(rng, Shape{n, 1}));
    Var Ax = matmul(t.constant(A), x);
    Var f = add(scale(sum(mul(x, Ax)), 0.5), sum(mul(t.constant(b), x)));
    GradResult g = grad(f, std::span<const Var>(&x, 1), true);
    Var gv = sum(mul(g.grads[0], t.constant(v)));
    GradResult h = grad(gv, std::span<const Var>(&x, 1), false);
    Tensor expect(Shape{n, 1});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        expect[i] += 0.5 * (A[i * n + j] + A[j * n + i]) * v[j];
    EXPECT_LT(relative_error(h.grads[0].value(), expect), 1e-6);
  }
}

// Second derivatives of the nonlinear pieces against finite differences of
// the first-order gradient.
TEST(Autodiff, SecondOrderThroughNonlinearOps) {
  Rng rng(41);
  const Tensor w = random_tensor(rng, Shape{2, 2, 3, 3});
  const Tensor probe = random_tensor(rng, Shape{2, 2, 3, 3});
  const Tensor target = [] {
    Tensor t(Shape{2, 3});
    t[1] = 1.0;
    t[5] = 1.0;
    return t;
  }();
  const Tensor fc = random_tensor(rng, Shape{18, 3});
  // h(x) = <grad_w L(x, w), probe>, L through conv, BN, softmax-CE.
  const ScalarFn h = [&](Tape& t, Var x) {
    Var wv = t.variable(w);
    Var y = conv2d(x, wv, 1, 1);
    Var bn = batch_norm_train(y, t.constant(Tensor(Shape{2}, 1.3)),
                              t.constant(Tensor(Shape{2}, 0.1)));
    Var z = matmul(reshape(bn, Shape{2, 18}), t.constant(fc));
    Var loss = softmax_cross_entropy(z, t.constant(target));
    GradResult g = grad(loss, std::span<const Var>(&wv, 1), true);
    return sum(mul(g.grads[0], t.constant(probe)));
  };
  const Tensor x = random_tensor(rng, Shape{2, 2, 3, 3});
  EXPECT_LT(relative_error(tape_grad(h, x), numeric_grad(h, x)), 1e-4);
}

TEST(Autodiff, LinearityOfGrad) {
  Rng rng(12);
  const Tensor x0 = random_tensor(rng, Shape{6});
  auto f = [](Var a) { return sum_of_squares(softmax_rows(reshape(a, Shape{2, 3}))); };
  auto g = [](Var a) { return mean(mul(a, a)); };
  const double a = 1.7, b = -0.3;
  Tape t;
  Var x = t.variable(x0);
  const Tensor gf = grad(f(x), std::span<const Var>(&x, 1), false).grads[0].value();
  const Tensor gg = grad(g(x), std::span<const Var>(&x, 1), false).grads[0].value();
  const Tensor gc = grad(add(scale(f(x), a), scale(g(x), b)),
                         std::span<const Var>(&x, 1), false).grads[0].value();
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(gc[i], a * gf[i] + b * gg[i], 1e-12);
}

TEST(Autodiff, DeterministicValuesAndGradients) {
  auto run = [] {
    Rng rng(4);
    Tape t;
    Var x = t.variable(random_tensor(rng, Shape{2, 1, 4, 4}));
    Var w = t.variable(random_tensor(rng, Shape{3, 1, 3, 3}));
    Var y = relu(batch_norm_train(conv2d(x, w, 1, 1), t.constant(Tensor(Shape{3}, 1.0)),
                                  t.constant(Tensor(Shape{3}, 0.0))));
    Var loss = sum_of_squares(y);
    const Var wrt[] = {x, w};
    GradResult g = grad(loss, wrt, false);
    return std::make_tuple(loss.value(), g.grads[0].value(), g.grads[1].value());
  };
  EXPECT_EQ(run(), run());
}

TEST(Autodiff, ReluSubgradientAtZeroIsZero) {
  Tape t;
  Var x = t.variable(Tensor::vector({-1, 0, 2}));
  GradResult g = grad(sum(relu(x)), std::span<const Var>(&x, 1), false);
  EXPECT_EQ(g.grads[0].value().storage(), (std::vector<double>{0, 0, 1}));
}

TEST(Autodiff, RejectsNonScalarOutput) {
  Tape t;
  Var x = t.variable(Tensor::vector({1, 2}));
  EXPECT_THROW(grad(mul(x, x), std::span<const Var>(&x, 1), false), ShapeError);
}

TEST(Autodiff, RejectsConstantWrt) {
  Tape t;
  Var x = t.variable(Tensor::vector({1, 2}));
  Var c = t.constant(Tensor::vector({3, 4}));
  Var y = sum(mul(x, c));
  EXPECT_THROW(grad(y, std::span<const Var>(&c, 1), false), std::invalid_argument);
}

TEST(Autodiff, UnreachableWrtGivesZerosAndFlag) {
  Tape t;
  Var x = t.variable(Tensor::vector({1, 2}));
  Var z = t.variable(Tensor::vector({5, 6, 7}));
  Var y = sum_of_squares(x);
  const Var wrt[] = {x, z};
  GradResult g = grad(y, wrt, false);
  ASSERT_EQ(g.unreachable, std::vector<std::size_t>{1});
  EXPECT_EQ(g.grads[1].value(), Tensor(Shape{3}, 0.0));
  EXPECT_EQ(g.grads[0].value().storage(), (std::vector<double>{2, 4}));
}

TEST(Autodiff, ShapeMismatchNamesPrimitive) {
  Tape t;
  Var a = t.variable(Tensor(Shape{2, 3}));
  Var b = t.variable(Tensor(Shape{3, 2}));
  try {
    add(a, b);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("add"), std::string::npos);
  }
  try {
    matmul(a, a);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
  }
}

TEST(Autodiff, BatchNormNeedsTwoValuesPerChannel) {
  Tape t;
  Var x = t.variable(Tensor(Shape{1, 2}));
  EXPECT_THROW(batch_norm_train(x, t.constant(Tensor(Shape{2}, 1.0)),
                                t.constant(Tensor(Shape{2}, 0.0))),
               ShapeError);
  // One sample with spatial extent has enough values per channel.
  Var img = t.variable(Tensor(Shape{1, 2, 2, 2}));
  EXPECT_NO_THROW(batch_norm_train(img, t.constant(Tensor(Shape{2}, 1.0)),
                                   t.constant(Tensor(Shape{2}, 0.0))));
}

TEST(Autodiff, NoGradGuardStopsRecording) {
  Tape t;
  Var x = t.variable(Tensor::scalar(2.0));
  {
    NoGradGuard guard(t);
    EXPECT_FALSE(mul(x, x).requires_grad());
  }
  EXPECT_TRUE(mul(x, x).requires_grad());
}

TEST(Autodiff, TapeIsTopologicallyOrdered) {
  Rng rng(1);
  Tape t;
  Var x = t.variable(random_tensor(rng, Shape{2, 3}));
  Var y = softmax_cross_entropy(x, t.constant(Tensor(Shape{2, 3}, 1.0 / 3)));
  GradResult g = grad(y, std::span<const Var>(&x, 1), true);
  grad(sum_of_squares(g.grads[0]), std::span<const Var>(&x, 1), true);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Node& n = t.node(i);
    for (std::size_t k = 0; k < n.num_inputs; ++k) EXPECT_LT(n.inputs[k], i);
  }
}

}  // namespace
}  // namespace awa::ad
