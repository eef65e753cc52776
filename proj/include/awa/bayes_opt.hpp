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

#ifndef AWA_BAYES_OPT_HPP_
#define AWA_BAYES_OPT_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "awa/gp.hpp"

namespace awa {

// Objective on the unit cube; may return +inf for an aborted evaluation.
using Objective = std::function<double(std::span<const double>)>;

struct ProposalOptions {
  std::size_t candidates = 1024;
  std::size_t starts = 4;
  int passes = 20;
  double initial_step = 0.1;
  double shrink = 0.7;
  // Proposals stay this far inside the cube.
  double margin = 1e-6;
};

// Maximizes EI of `state` over the unit cube (minimization of f). Candidates
// are a randomly shifted Halton set; the best few are refined coordinate-wise.
std::vector<double> propose_next(const GpState& state, std::size_t dims,
                                 std::uint64_t seed,
                                 const ProposalOptions& options = {});

// EI in standardized units at q, against the best standardized target.
double acquisition(const GpState& state, std::span<const double> q);

enum class TrialPhase { kRandom, kGuided };

struct Trial {
  std::size_t index = 0;
  TrialPhase phase = TrialPhase::kRandom;
  std::vector<double> x;  // unit cube
  double f = 0.0;         // +inf when aborted
  double cumulative_min = 0.0;
  bool aborted = false;
  bool fallback = false;  // GP unusable; proposal drawn at random
  double wall_seconds = 0.0;
};

struct BoOptions {
  std::size_t dims = 0;
  std::size_t budget = 50;   // N_BO
  std::size_t initial = 12;  // n
  std::uint64_t seed = 0;
  DimensionGroups groups;
  // Model log(f) instead of f; for non-negative objectives spanning decades.
  bool log_objective = false;
  // Evaluate the random phase with OpenMP.
  bool parallel_initial = false;
  ProposalOptions proposal;
};

struct BoResult {
  std::vector<Trial> trials;
  std::size_t best = 0;  // index of the smallest finite f
  bool all_aborted = false;
};

// n seeded random trials, then budget - n GP-guided ones.
BoResult bayes_minimize(const Objective& f, const BoOptions& options);

// Uniform random search with the same trial bookkeeping.
BoResult random_search(const Objective& f, std::size_t dims,
                       std::size_t budget, std::uint64_t seed);

// Observation set for the GP: duplicate points nudged apart and +inf values
// replaced by the worst finite value (flagged).
ObservationSet make_observations(std::span<const Trial> trials,
                                 bool log_objective, std::uint64_t seed);

}  // namespace awa

#endif  // AWA_BAYES_OPT_HPP_
