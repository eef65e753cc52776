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

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>

#include "awa/gp.hpp"
#include "awa/rng.hpp"

namespace awa {
namespace {

ObservationSet random_observations(Rng& rng, std::size_t n, std::size_t d) {
  ObservationSet obs(n);
  for (auto& o : obs) {
    for (std::size_t i = 0; i < d; ++i) o.x.push_back(rng.uniform());
    o.f = std::sin(6 * o.x[0]) + 0.5 * o.x.back();
  }
  return obs;
}

// Dense reference posterior from an explicit inverse.
struct DenseGp {
  Eigen::MatrixXd Kinv;
  Eigen::VectorXd y;
  DenseGp(const GpState& s) {
    const auto n = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        K(i, j) = se_kernel(s.hyper, s.x[i], s.x[j]) + (i == j ? s.jitter : 0.0);
    Kinv = K.inverse();
    y = Eigen::Map<const Eigen::VectorXd>(s.y.data(), n);
  }
  Posterior at(const GpState& s, std::span<const double> q) const {
    Eigen::VectorXd k(Kinv.rows());
    for (Eigen::Index i = 0; i < k.size(); ++i) k(i) = se_kernel(s.hyper, s.x[i], q);
    return {k.dot(Kinv * y), se_kernel(s.hyper, q, q) - k.dot(Kinv * k)};
  }
};

TEST(Kernel, SquaredExponentialValues) {
  GpHyperparameters h{{0.5, 2.0}, 1.5, 1e-6};
  const std::vector<double> a{0.1, 0.2}, b{0.6, 0.2}, c{0.1, 2.2};
  EXPECT_DOUBLE_EQ(se_kernel(h, a, a), 1.5);
  EXPECT_NEAR(se_kernel(h, a, b), 1.5 * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(se_kernel(h, a, c), 1.5 * std::exp(-0.5), 1e-15);
  EXPECT_DOUBLE_EQ(se_kernel(h, a, b), se_kernel(h, b, a));
}

TEST(Gp, PosteriorMatchesDenseReference) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + rng.below(4);
    const ObservationSet obs = random_observations(rng, 3 + rng.below(10), d);
    GpHyperparameters h;
    for (std::size_t i = 0; i < d; ++i) h.length_scales.push_back(rng.uniform(0.2, 1.5));
    h.signal_variance = rng.uniform(0.5, 2);
    h.noise = 1e-2;
    const GpState s = fit_gp(obs, h);
    const DenseGp ref(s);
    for (int k = 0; k < 5; ++k) {
      std::vector<double> q(d);
      for (double& v : q) v = rng.uniform();
      const Posterior p = gp_posterior(s, q);
      const Posterior r = ref.at(s, q);
      EXPECT_NEAR(p.mean, r.mean, 1e-8);
      EXPECT_NEAR(p.variance, std::max(r.variance, 0.0), 1e-8);
    }
  }
}

TEST(Gp, InterpolatesObservationsWithSmallNoise) {
  ObservationSet obs{{{0.1}, 3.0}, {{0.5}, -1.0}, {{0.9}, 2.0}};
  const GpState s = fit_gp(obs, {{0.3}, 1.0, 1e-6});
  for (const auto& o : obs) {
    const Posterior p = gp_posterior(s, o.x);
    EXPECT_NEAR(s.destandardize(p.mean), o.f, 1e-4);
    EXPECT_LT(p.variance, 1e-4);
  }
  const std::vector<double> far{1e6};
  EXPECT_NEAR(gp_posterior(s, far).variance, 1.0, 1e-12);
  EXPECT_NEAR(gp_posterior(s, far).mean, 0.0, 1e-12);
}

TEST(Gp, StandardizationIsExact) {
  ObservationSet obs{{{0.0}, 1.0}, {{1.0}, 3.0}};
  const GpState s = fit_gp(obs, {{1.0}, 1.0, 1e-6});
  EXPECT_DOUBLE_EQ(s.f_mean, 2.0);
  EXPECT_DOUBLE_EQ(s.f_std, 1.0);
  EXPECT_EQ(s.y, (std::vector<double>{-1.0, 1.0}));
}

TEST(Gp, VarianceIsNeverNegative) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const ObservationSet obs = random_observations(rng, 15, 2);
    const GpState s = fit_gp(obs, {{1.6, 1.6}, 2.0, 1e-6});
    for (int k = 0; k < 50; ++k) {
      const std::vector<double> q{rng.uniform(), rng.uniform()};
      EXPECT_GE(gp_posterior(s, q).variance, 0.0);
    }
  }
}

TEST(Gp, JitterEscalatesOnDuplicates) {
  ObservationSet obs;
  for (int i = 0; i < 30; ++i) obs.push_back({{0.5, 0.5}, static_cast<double>(i % 2)});
  const GpState s = fit_gp(obs, {{1.0, 1.0}, 1.0, 0.0});
  EXPECT_GE(s.jitter, 1e-8);
  EXPECT_LE(s.jitter, 1e-2 * (1 + 1e-9));
}

TEST(Gp, UnfactorizableThrows) {
  ObservationSet obs{{{std::numeric_limits<double>::quiet_NaN()}, 1.0}, {{0.2}, 2.0}};
  EXPECT_THROW(fit_gp(obs, {{1.0}, 1.0, 1e-6}), GpFactorizationError);
}

TEST(Gp, InputValidation) {
  EXPECT_THROW(fit_gp({}, {{1.0}, 1.0, 1e-6}), std::invalid_argument);
  ObservationSet obs{{{0.1, 0.2}, 1.0}};
  EXPECT_THROW(fit_gp(obs, {{1.0}, 1.0, 1e-6}), std::invalid_argument);
}

TEST(Gp, LogMarginalLikelihoodMatchesDenseFormula) {
  Rng rng(3);
  const ObservationSet obs = random_observations(rng, 8, 2);
  const GpState s = fit_gp(obs, {{0.4, 0.8}, 1.0, 1e-2});
  const DenseGp ref(s);
  const double n = static_cast<double>(s.size());
  const double expect = -0.5 * ref.y.dot(ref.Kinv * ref.y) +
                        0.5 * std::log(ref.Kinv.determinant()) -
                        0.5 * n * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(log_marginal_likelihood(s), expect, 1e-8);
}

TEST(Gp, HyperparameterSearchPicksGridMaximum) {
  Rng rng(4);
  const ObservationSet obs = random_observations(rng, 10, 3);
  const DimensionGroups groups{{0, 1}, {2}};
  const GpState best = fit_hyperparameters(obs, groups);
  EXPECT_FALSE(best.defaults);
  const double best_lml = log_marginal_likelihood(best);
  for (double l0 : kLengthScaleGrid)
    for (double l1 : kLengthScaleGrid)
      for (double sv : kSignalVarianceGrid)
        for (double nz : kNoiseGrid) {
          GpState s;
          try {
            s = fit_gp(obs, {{l0, l0, l1}, sv, nz});
          } catch (const GpFactorizationError&) {
            continue;
          }
          EXPECT_GE(best_lml, log_marginal_likelihood(s) - 1e-9);
        }
  EXPECT_EQ(best.hyper.length_scales[0], best.hyper.length_scales[1]);
}

TEST(Gp, DegenerateTargetsUseDefaults) {
  ObservationSet one{{{0.3}, 2.0}};
  EXPECT_TRUE(fit_hyperparameters(one).defaults);
  ObservationSet flat{{{0.3}, 2.0}, {{0.6}, 2.0}, {{0.9}, 2.0}};
  const GpState s = fit_hyperparameters(flat);
  EXPECT_TRUE(s.defaults);
  EXPECT_EQ(s.hyper.length_scales, std::vector<double>{1.0});
}

TEST(ExpectedImprovement, Examples) {
  EXPECT_NEAR(expected_improvement(0.0, 1.0, 0.0), 1.0 / std::sqrt(2 * std::numbers::pi),
              1e-15);
  EXPECT_EQ(expected_improvement(1.0, 0.0, 3.0), 2.0);
  EXPECT_EQ(expected_improvement(4.0, 0.0, 3.0), 0.0);
  EXPECT_THROW(expected_improvement(0.0, -1.0, 0.0), std::invalid_argument);
  // Far above the incumbent EI vanishes without going negative.
  EXPECT_GE(expected_improvement(50.0, 1.0, 0.0), 0.0);
  EXPECT_LT(expected_improvement(50.0, 1.0, 0.0), 1e-300);
}

TEST(ExpectedImprovement, MatchesNumericalIntegral) {
  for (double mu : {-1.0, 0.0, 0.7}) {
    for (double s2 : {0.04, 1.0, 4.0}) {
      const double fmin = 0.2, s = std::sqrt(s2);
      double integral = 0.0;
      const int steps = 200000;
      const double lo = mu - 12 * s, h = 24 * s / steps;
      for (int i = 0; i < steps; ++i) {
        const double f = lo + (i + 0.5) * h;
        const double z = (f - mu) / s;
        integral += std::max(fmin - f, 0.0) * std::exp(-0.5 * z * z) /
                    (s * std::sqrt(2 * std::numbers::pi)) * h;
      }
      EXPECT_NEAR(expected_improvement(mu, s2, fmin), integral, 1e-6);
    }
  }
}

TEST(ExpectedImprovement, MonotoneInMeanAndVariance) {
  double prev = std::numeric_limits<double>::infinity();
  for (double mu = -3; mu <= 3; mu += 0.25) {
    const double ei = expected_improvement(mu, 1.0, 0.0);
    EXPECT_LE(ei, prev);
    prev = ei;
  }
  prev = 0.0;
  for (double s2 = 0.01; s2 <= 10; s2 *= 1.5) {
    const double ei = expected_improvement(0.5, s2, 0.0);
    EXPECT_GE(ei, prev);
    prev = ei;
  }
}

}  // namespace
}  // namespace awa
