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

#ifndef AWA_EXPERIMENT_HPP_
#define AWA_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "awa/attack.hpp"
#include "awa/awa.hpp"
#include "awa/fedavg.hpp"
#include "awa/metrics.hpp"
#include "awa/model.hpp"

namespace awa {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  // [model]
  std::string arch = "cnn_small";
  ImageShape shape{3, 8, 8};
  std::size_t classes = 10;
  // [training]
  std::size_t n = 4;
  int epochs = 1;
  int batches = 1;
  std::size_t batch_size = 4;
  double lr = 0.001;
  int warmup_rounds = 0;
  // [attack]
  int attack_iterations = 1000;
  double attack_lr = 0.1;
  LossKind loss = LossKind::kWeighted;
  int target_epoch = 1;
  bool optimize_labels = false;
  std::optional<WeightVectorQ> q;
  // [bo]
  std::size_t bo_budget = 50;
  std::size_t bo_initial = 12;
  QBounds bounds;
  std::optional<std::uint64_t> bo_seed;
  bool log_objective = true;
  bool parallel_initial = false;
  // [data]
  std::string data_source = "synthetic";
  std::filesystem::path data_dir;
  // [run]
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "awa_run";
  std::filesystem::path round_dir;  // empty: <out>/round
  int case_id = 0;

  TrainingConfig training() const;
  std::filesystem::path round_path() const;
  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Reads an INI file with sections [model] [training] [attack] [bo] [data]
// [run]; unknown keys are errors. Does not validate.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

// N = 4 with (E, B) = (1,1), (4,1), (1,4), (2,2) for cases 1..4.
void apply_case(ExperimentConfig& config, int case_id);

std::vector<double> parse_q_list(const std::string& text);

// Everything the simulation produced, ground truth included.
struct Simulation {
  RoundRecord record;
  Dataset data;
  ShuffleTrace trace;  // of the attacked round
};

Dataset make_dataset(const ExperimentConfig& config);
Simulation simulate(const ExperimentConfig& config);

// Known labels in the order the attack replays mini-batches.
std::vector<int> attack_labels(const Simulation& sim, int target_epoch);

AttackConfig attack_config(const ExperimentConfig& config);
AwaBoConfig bo_config(const ExperimentConfig& config);

// Matched metrics of x_hat [N,C,H,W] against the dataset images.
MatchResult evaluate_reconstruction(const Dataset& truth, const Tensor& x_hat);

// Directory layout: <out>/round (theta files, round.json, dataset.json),
// images, trace and metrics at <out>.
void save_simulation(const std::filesystem::path& dir, const Simulation& sim);
Simulation load_simulation(const std::filesystem::path& dir);

void cmd_simulate(const ExperimentConfig& config, std::ostream& log);
// Q overrides config.q; use_truth_init starts the dummy at the ground truth.
void cmd_attack(const ExperimentConfig& config, std::ostream& log,
                bool use_truth_init = false);
void cmd_tune(const ExperimentConfig& config, std::ostream& log);
// One CSV row per run directory; runs without metrics.json become warning rows.
void cmd_report(const std::vector<std::filesystem::path>& runs,
                const std::filesystem::path& csv_path, std::ostream& log);

}  // namespace awa

#endif  // AWA_EXPERIMENT_HPP_
