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

#ifndef AWA_GP_HPP_
#define AWA_GP_HPP_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace awa {

// One observation of the objective at a point of the unit cube.
struct Observation {
  std::vector<double> x;
  double f = 0.0;
  bool substituted = false;  // f replaced the +inf of an aborted trial
};
using ObservationSet = std::vector<Observation>;

struct GpHyperparameters {
  std::vector<double> length_scales;  // one per input dimension
  double signal_variance = 1.0;
  double noise = 1e-6;
};

// Squared-exponential kernel s2 * exp(-0.5 * sum_i ((a_i - b_i) / l_i)^2).
double se_kernel(const GpHyperparameters& h, std::span<const double> a,
                 std::span<const double> b);

class GpFactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fitted zero-mean GP on standardized targets.
struct GpState {
  GpHyperparameters hyper;
  double f_mean = 0.0;
  double f_std = 1.0;
  double jitter = 0.0;  // noise actually added to the diagonal
  bool defaults = false;
  std::vector<std::vector<double>> x;
  std::vector<double> y;      // standardized targets
  std::vector<double> alpha;  // (K + jitter I)^{-1} y
  std::vector<double> chol;   // lower Cholesky factor, row-major n x n

  std::size_t size() const { return x.size(); }
  double standardize(double f) const { return (f - f_mean) / f_std; }
  double destandardize(double z) const { return z * f_std + f_mean; }
};

// Standardizes `obs` and factors the Gram matrix. The diagonal jitter starts
// at hyper.noise (at least 1e-8) and grows x10 up to 1e-2 until the
// factorization succeeds; throws GpFactorizationError past that.
GpState fit_gp(const ObservationSet& obs, const GpHyperparameters& hyper);

// Log marginal likelihood of the standardized targets under `state`.
double log_marginal_likelihood(const GpState& state);

// Dimension groups sharing one length scale; empty means one isotropic group.
using DimensionGroups = std::vector<std::vector<std::size_t>>;

inline constexpr double kLengthScaleGrid[] = {0.1, 0.2, 0.4, 0.8, 1.6};
inline constexpr double kSignalVarianceGrid[] = {0.5, 1.0, 2.0};
inline constexpr double kNoiseGrid[] = {1e-6, 1e-2};

// Grid search over length scales (per group), signal variance and noise for
// the largest log marginal likelihood. Fewer than two distinct targets give
// unit defaults.
GpState fit_hyperparameters(const ObservationSet& obs,
                            const DimensionGroups& groups = {});

struct Posterior {
  double mean = 0.0;      // standardized units
  double variance = 0.0;  // standardized units, >= 0
};

Posterior gp_posterior(const GpState& state, std::span<const double> q);

// Closed-form EI for minimization; max(f_min - mu, 0) when sigma < 1e-12.
double expected_improvement(double mu, double sigma2, double f_min);

}  // namespace awa

#endif  // AWA_GP_HPP_
