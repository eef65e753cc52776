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

#ifndef AWA_FEDAVG_HPP_
#define AWA_FEDAVG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "awa/model.hpp"

namespace awa {

// A client's private samples: images [N, C, H, W] with values in [0, 1].
struct Dataset {
  Tensor images;
  std::vector<int> labels;
  std::size_t classes = 10;

  std::size_t size() const { return labels.size(); }
  ImageShape image_shape() const;
  // Samples at `indices`, in that order.
  Tensor gather(std::span<const std::size_t> indices) const;
  std::vector<int> gather_labels(std::span<const std::size_t> indices) const;
  Tensor image(std::size_t i) const;  // [C, H, W]
};

struct TrainingConfig {
  int epochs = 1;              // E
  int batches = 1;             // B
  double lr = 0.001;           // eta
  std::size_t batch_size = 1;  // M
  std::uint64_t shuffle_seed = 0;
  std::uint64_t round = 0;

  std::size_t dataset_size() const {
    return static_cast<std::size_t>(batches) * batch_size;
  }
  // Throws std::invalid_argument unless every field is in range and
  // n == B * M.
  void validate(std::size_t n) const;
};

// One permutation of 0..N-1 per epoch; mini-batch b of epoch e takes
// positions [b*M, (b+1)*M) of trace[e].
using ShuffleTrace = std::vector<std::vector<std::size_t>>;

// Permutation used in (round, epoch); keyed on the shuffle seed so epochs are
// independent streams.
std::vector<std::size_t> epoch_permutation(std::uint64_t shuffle_seed,
                                           std::uint64_t round,
                                           std::uint64_t epoch, std::size_t n);

// theta - lr * grad_theta loss(X, targets)
ModelParams sgd_step(const Architecture& arch, const ModelParams& theta,
                     const Tensor& x, const Tensor& targets, double lr);

struct ClientResult {
  ModelParams theta_next;
  ShuffleTrace trace;
};

ClientResult client_update(const Architecture& arch, const ModelParams& theta,
                           const Dataset& data, const TrainingConfig& config);

// What an honest-but-curious server holds after one round of one client.
struct RoundRecord {
  Architecture arch;
  ModelParams theta_start;
  ModelParams theta_end;
  TrainingConfig config;
  std::size_t n = 0;
};

ModelUpdate model_update(const ModelParams& theta_start,
                         const ModelParams& theta_end);
inline ModelUpdate model_update(const RoundRecord& r) {
  return model_update(r.theta_start, r.theta_end);
}

struct ClientModel {
  ModelParams params;
  std::size_t n = 0;
};

// sum_k (N_k / sum N) theta_k
ModelParams server_aggregate(std::span<const ClientModel> clients);

enum class Scenario { kS1 = 1, kS2 = 2, kS3 = 3, kS4 = 4 };

const char* scenario_name(Scenario s);

// S1: E=1,B=1   S2: E>1,B=1   S3: E=1,B>1   S4: E>1,B>1
Scenario scenario_of(const TrainingConfig& config);

// theta_start.bin, theta_end.bin and round.json in `dir`.
void save_round(const std::filesystem::path& dir, const RoundRecord& record);
RoundRecord load_round(const std::filesystem::path& dir);

}  // namespace awa

#endif  // AWA_FEDAVG_HPP_
