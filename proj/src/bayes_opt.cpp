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

#include "awa/bayes_opt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "awa/rng.hpp"

namespace awa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDuplicateTolerance = 1e-9;
constexpr double kLogFloor = 1e-300;

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

double radical_inverse(std::size_t i, unsigned base) {
  double inv = 1.0 / base, scale = inv, r = 0.0;
  while (i > 0) {
    r += static_cast<double>(i % base) * scale;
    i /= base;
    scale *= inv;
  }
  return r;
}

double distance2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<double> random_point(Rng& rng, std::size_t dims) {
  std::vector<double> x(dims);
  for (double& v : x) v = rng.uniform();
  return x;
}

void finish(BoResult& r) {
  double run = kInf;
  std::size_t best = 0;
  bool any = false;
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    Trial& t = r.trials[i];
    if (std::isfinite(t.f) && (!any || t.f < run)) {
      run = t.f;
      best = i;
      any = true;
    }
    t.cumulative_min = run;
  }
  r.best = best;
  r.all_aborted = !any;
}

}  // namespace

double acquisition(const GpState& state, std::span<const double> q) {
  const double f_min = *std::min_element(state.y.begin(), state.y.end());
  const Posterior p = gp_posterior(state, q);
  return expected_improvement(p.mean, p.variance, f_min);
}

std::vector<double> propose_next(const GpState& state, std::size_t dims,
                                 std::uint64_t seed,
                                 const ProposalOptions& opt) {
  if (state.size() == 0) throw std::invalid_argument("propose_next: empty GP");
  if (dims == 0 || dims > std::size(kPrimes)) {
    throw std::invalid_argument("propose_next: unsupported dimension count");
  }
  const double lo = opt.margin, hi = 1.0 - opt.margin;
  Rng rng(seed);
  std::vector<double> shift(dims);
  for (double& s : shift) s = rng.uniform();

  struct Scored {
    std::vector<double> x;
    double ei;
  };
  std::vector<Scored> cands;
  cands.reserve(opt.candidates);
  for (std::size_t i = 0; i < opt.candidates; ++i) {
    std::vector<double> x(dims);
    for (std::size_t k = 0; k < dims; ++k) {
      double u = radical_inverse(i + 1, kPrimes[k]) + shift[k];
      u -= std::floor(u);
      x[k] = std::clamp(u, lo, hi);
    }
    const double ei = acquisition(state, x);
    cands.push_back({std::move(x), ei});
  }
  const std::size_t starts = std::min(opt.starts, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + starts, cands.end(),
                    [](const Scored& a, const Scored& b) { return a.ei > b.ei; });

  Scored best = cands[0];
  for (std::size_t s = 0; s < starts; ++s) {
    Scored cur = cands[s];
    double step = opt.initial_step;
    for (int pass = 0; pass < opt.passes; ++pass, step *= opt.shrink) {
      for (std::size_t k = 0; k < dims; ++k) {
        for (double dir : {-1.0, 1.0}) {
          std::vector<double> trial = cur.x;
          trial[k] = std::clamp(trial[k] + dir * step, lo, hi);
          const double ei = acquisition(state, trial);
          if (ei > cur.ei) cur = {std::move(trial), ei};
        }
      }
    }
    if (cur.ei > best.ei) best = std::move(cur);
  }
  return best.x;
}

ObservationSet make_observations(std::span<const Trial> trials,
                                 bool log_objective, std::uint64_t seed) {
  double worst = -kInf;
  for (const Trial& t : trials)
    if (std::isfinite(t.f)) worst = std::max(worst, t.f);
  ObservationSet obs;
  Rng rng(seed);
  for (const Trial& t : trials) {
    Observation o;
    o.x = t.x;
    o.f = t.f;
    if (!std::isfinite(o.f)) {
      if (!std::isfinite(worst)) continue;
      o.f = worst;
      o.substituted = true;
    }
    if (log_objective) o.f = std::log(std::max(o.f, kLogFloor));
    for (;;) {
      bool clash = false;
      for (const Observation& p : obs) {
        if (distance2(p.x, o.x) < kDuplicateTolerance * kDuplicateTolerance) {
          clash = true;
          break;
        }
      }
      if (!clash) break;
      for (double& v : o.x) v = std::clamp(v + 1e-6 * rng.normal(), 0.0, 1.0);
    }
    obs.push_back(std::move(o));
  }
  return obs;
}

BoResult bayes_minimize(const Objective& f, const BoOptions& opt) {
  if (opt.dims == 0) throw std::invalid_argument("BO: dims must be positive");
  if (opt.initial < 2 || opt.budget <= opt.initial) {
    throw std::invalid_argument("BO: need budget > initial >= 2 (got " +
                                std::to_string(opt.budget) + "/" +
                                std::to_string(opt.initial) + ")");
  }
  BoResult r;
  r.trials.resize(opt.initial);
  Rng init_rng(derive_seed(opt.seed, "bo", 0));
  for (std::size_t i = 0; i < opt.initial; ++i) {
    r.trials[i].index = i;
    r.trials[i].x = random_point(init_rng, opt.dims);
  }
  const long n_init = static_cast<long>(opt.initial);
#pragma omp parallel for schedule(dynamic) if (opt.parallel_initial)
  for (long i = 0; i < n_init; ++i) {
    Trial& t = r.trials[static_cast<std::size_t>(i)];
    const auto t0 = std::chrono::steady_clock::now();
    t.f = f(t.x);
    t.wall_seconds = elapsed(t0);
    t.aborted = !std::isfinite(t.f);
    if (t.aborted) t.f = kInf;
  }

  for (std::size_t i = opt.initial; i < opt.budget; ++i) {
    Trial t;
    t.index = i;
    t.phase = TrialPhase::kGuided;
    const std::uint64_t step_seed = derive_seed(opt.seed, "bo", 1, i);
    try {
      const ObservationSet obs =
          make_observations(r.trials, opt.log_objective, step_seed);
      if (obs.size() < 2) throw GpFactorizationError("too few finite trials");
      const GpState gp = fit_hyperparameters(obs, opt.groups);
      t.x = propose_next(gp, opt.dims, step_seed, opt.proposal);
    } catch (const GpFactorizationError&) {
      Rng rng(step_seed);
      t.x = random_point(rng, opt.dims);
      t.fallback = true;
    }
    const auto t0 = std::chrono::steady_clock::now();
    t.f = f(t.x);
    t.wall_seconds = elapsed(t0);
    t.aborted = !std::isfinite(t.f);
    if (t.aborted) t.f = kInf;
    r.trials.push_back(std::move(t));
  }
  finish(r);
  return r;
}

BoResult random_search(const Objective& f, std::size_t dims,
                       std::size_t budget, std::uint64_t seed) {
  BoResult r;
  Rng rng(derive_seed(seed, "random-search"));
  for (std::size_t i = 0; i < budget; ++i) {
    Trial t;
    t.index = i;
    t.x = random_point(rng, dims);
    const auto t0 = std::chrono::steady_clock::now();
    t.f = f(t.x);
    t.wall_seconds = elapsed(t0);
    t.aborted = !std::isfinite(t.f);
    if (t.aborted) t.f = kInf;
    r.trials.push_back(std::move(t));
  }
  finish(r);
  return r;
}

}  // namespace awa
