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

#include "awa/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace awa {

double se_kernel(const GpHyperparameters& h, std::span<const double> a,
                 std::span<const double> b) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / h.length_scales[i];
    r2 += d * d;
  }
  return h.signal_variance * std::exp(-0.5 * r2);
}

namespace {

constexpr double kMinJitter = 1e-8;
constexpr double kMaxJitter = 1e-2;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

GpState fit_gp(const ObservationSet& obs, const GpHyperparameters& hyper) {
  if (obs.empty()) throw std::invalid_argument("fit_gp: no observations");
  const std::size_t n = obs.size();
  const std::size_t d = obs[0].x.size();
  if (hyper.length_scales.size() != d) {
    throw std::invalid_argument("fit_gp: " +
                                std::to_string(hyper.length_scales.size()) +
                                " length scales for " + std::to_string(d) +
                                " dimensions");
  }
  GpState s;
  s.hyper = hyper;
  double mean = 0.0;
  for (const auto& o : obs) mean += o.f;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& o : obs) var += (o.f - mean) * (o.f - mean);
  var /= static_cast<double>(n);
  s.f_mean = mean;
  s.f_std = var > 1e-24 ? std::sqrt(var) : 1.0;
  for (const auto& o : obs) {
    if (o.x.size() != d) throw std::invalid_argument("fit_gp: ragged inputs");
    s.x.push_back(o.x);
    s.y.push_back(s.standardize(o.f));
  }

  Matrix K(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      K(i, j) = K(j, i) = se_kernel(hyper, s.x[i], s.x[j]);

  for (double jitter = std::max(hyper.noise, kMinJitter);
       jitter <= kMaxJitter * (1 + 1e-9); jitter *= 10.0) {
    Matrix A = K;
    A.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) continue;
    const Matrix L = llt.matrixL();
    if (!L.diagonal().allFinite() || L.diagonal().minCoeff() <= 0.0) continue;
    s.jitter = jitter;
    s.chol.assign(L.data(), L.data() + n * n);
    Eigen::Map<const Eigen::VectorXd> y(s.y.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd alpha = llt.solve(y);
    s.alpha.assign(alpha.data(), alpha.data() + n);
    return s;
  }
  throw GpFactorizationError("GP Gram matrix not positive definite with jitter up to 1e-2");
}

double log_marginal_likelihood(const GpState& s) {
  const std::size_t n = s.size();
  double fit = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fit += s.y[i] * s.alpha[i];
    logdet += std::log(s.chol[i * n + i]);
  }
  return -0.5 * fit - logdet -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

GpState fit_hyperparameters(const ObservationSet& obs,
                            const DimensionGroups& groups_in) {
  if (obs.empty()) throw std::invalid_argument("fit_hyperparameters: no observations");
  const std::size_t d = obs[0].x.size();
  DimensionGroups groups = groups_in;
  if (groups.empty()) {
    groups.emplace_back();
    for (std::size_t i = 0; i < d; ++i) groups[0].push_back(i);
  }

  const auto [lo, hi] = std::minmax_element(
      obs.begin(), obs.end(),
      [](const Observation& a, const Observation& b) { return a.f < b.f; });
  if (obs.size() < 2 || hi->f - lo->f <= 1e-12 * std::max(1.0, std::abs(hi->f))) {
    GpHyperparameters h;
    h.length_scales.assign(d, 1.0);
    GpState s = fit_gp(obs, h);
    s.defaults = true;
    return s;
  }

  const std::size_t grid = std::size(kLengthScaleGrid);
  std::size_t combos = 1;
  for (std::size_t g = 0; g < groups.size(); ++g) combos *= grid;

  GpState best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t c = 0; c < combos; ++c) {
    GpHyperparameters h;
    h.length_scales.assign(d, 1.0);
    std::size_t code = c;
    for (const auto& group : groups) {
      const double l = kLengthScaleGrid[code % grid];
      code /= grid;
      for (std::size_t i : group) h.length_scales.at(i) = l;
    }
    for (double sv : kSignalVarianceGrid) {
      for (double noise : kNoiseGrid) {
        h.signal_variance = sv;
        h.noise = noise;
        GpState s;
        try {
          s = fit_gp(obs, h);
        } catch (const GpFactorizationError&) {
          continue;
        }
        const double lml = log_marginal_likelihood(s);
        if (std::isfinite(lml) && lml > best_lml) {
          best_lml = lml;
          best = std::move(s);
          found = true;
        }
      }
    }
  }
  if (!found) throw GpFactorizationError("no hyperparameter setting factorizes");
  return best;
}

Posterior gp_posterior(const GpState& s, std::span<const double> q) {
  const std::size_t n = s.size();
  if (n == 0) throw std::invalid_argument("gp_posterior: empty GP");
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = se_kernel(s.hyper, q, s.x[i]);
  Posterior p;
  for (std::size_t i = 0; i < n; ++i) p.mean += k[i] * s.alpha[i];
  // v = L^{-1} k by forward substitution.
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = k[i];
    for (std::size_t j = 0; j < i; ++j) acc -= s.chol[i * n + j] * v[j];
    v[i] = acc / s.chol[i * n + i];
  }
  double vv = 0.0;
  for (double t : v) vv += t * t;
  p.variance = std::max(0.0, se_kernel(s.hyper, q, q) - vv);
  return p;
}

double expected_improvement(double mu, double sigma2, double f_min) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("EI: negative variance");
  const double sigma = std::sqrt(sigma2);
  const double diff = f_min - mu;
  if (sigma < 1e-12) return std::max(diff, 0.0);
  const double z = diff / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, diff * cdf + sigma * pdf);
}

}  // namespace awa
