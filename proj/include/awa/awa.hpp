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

#ifndef AWA_AWA_HPP_
#define AWA_AWA_HPP_

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "awa/attack.hpp"
#include "awa/bayes_opt.hpp"
#include "awa/fedavg.hpp"

namespace awa {

struct AwaBoConfig {
  std::size_t budget = 50;   // N_BO
  std::size_t initial = 12;  // n
  QBounds bounds;
  std::uint64_t seed = 0;
  bool log_objective = true;
  bool parallel_initial = false;
};

struct AwaTrial {
  std::size_t index = 0;
  TrialPhase phase = TrialPhase::kRandom;
  WeightVectorQ q;
  double f = 0.0;
  double cumulative_min = 0.0;
  bool aborted = false;
  bool fallback = false;
  double wall_seconds = 0.0;
};

struct AwaResult {
  WeightVectorQ q_star;
  AttackResult final;
  std::vector<AwaTrial> trials;
};

class AttackFailed : public std::runtime_error {
 public:
  AttackFailed(const std::string& what, std::vector<AwaTrial> trials)
      : std::runtime_error(what), trials_(std::move(trials)) {}
  const std::vector<AwaTrial>& trials() const { return trials_; }

 private:
  std::vector<AwaTrial> trials_;
};

// Tunes Q by BO over f(Q) from rec_attack, then reruns the attack at Q*.
// Every trial uses atk.init_seed, so trials differ only in Q. `labels` are
// the known labels in the order rec_attack expects.
AwaResult awa_optimize(const RoundRecord& record, const AttackConfig& atk,
                       const AwaBoConfig& bo, std::span<const int> labels);

// Deterministic trial log: index, phase, Q, f, cumulative min.
void write_trials_csv(const std::filesystem::path& path,
                      std::span<const AwaTrial> trials);
// Wall time per trial, kept apart from the deterministic log.
void write_trial_timing_csv(const std::filesystem::path& path,
                            std::span<const AwaTrial> trials);

}  // namespace awa

#endif  // AWA_AWA_HPP_
