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

#ifndef AWA_ATTACK_HPP_
#define AWA_ATTACK_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "awa/autodiff.hpp"
#include "awa/fedavg.hpp"
#include "awa/model.hpp"

namespace awa {

// Layer-weighting parameters (q_cv, q_bn, q_fc, q_en, p_mean, p_var).
struct WeightVectorQ {
  double q_cv = 1.0;
  double q_bn = 1.0;
  double q_fc = 1.0;
  double q_en = 1.0;
  double p_mean = 0.0;
  double p_var = 0.0;

  static constexpr std::size_t kDims = 6;
  std::array<double, kDims> to_array() const {
    return {q_cv, q_bn, q_fc, q_en, p_mean, p_var};
  }
  static WeightVectorQ from_array(std::span<const double> a);
  bool operator==(const WeightVectorQ&) const = default;
};

// Box bounds on Q; defaults are q in [1, 1000] and p in [0, 0.5].
struct QBounds {
  std::array<double, WeightVectorQ::kDims> lo{1, 1, 1, 1, 0, 0};
  std::array<double, WeightVectorQ::kDims> hi{1000, 1000, 1000, 1000, 0.5, 0.5};

  bool contains(const WeightVectorQ& q) const;
  WeightVectorQ from_unit(std::span<const double> u) const;
  std::array<double, WeightVectorQ::kDims> to_unit(const WeightVectorQ& q) const;
};

// ---- interpolation of intermediate epochs ---------------------------------

// theta_t + e * (theta_next - theta_t) / E, for e in 0..E.
ModelParams interpolate_params(const ModelParams& theta_t,
                               const ModelParams& theta_next, int epochs,
                               int e);

struct ApproxUpdates {
  std::vector<ModelUpdate> per_epoch;  // entry e-1 approximates epoch e
};

ApproxUpdates approximate_updates(const ModelParams& theta_t,
                                  const ModelParams& theta_next, int epochs);

// ---- layer weights --------------------------------------------------------

// Linear per-kind schedule: within a kind of count L_k > 1, position r
// (0-based) gets 1 + r (q_k - 1) / (L_k - 1); a lone layer gets q_k.
std::vector<double> weight_schedule(const WeightVectorQ& q,
                                    const LayerPartition& partition,
                                    std::size_t num_layers);

struct LayerErrors {
  std::vector<double> mean;  // |mu(hat) - mu(true)| / max(|mu(true)|, eps)
  std::vector<double> var;   // same with population variance
};

inline constexpr double kRelativeErrorFloor = 1e-12;

LayerErrors relative_errors(const ModelUpdate& hat, const ModelUpdate& target);

// Layers among the ceil(p_mean L) largest mean errors and the ceil(p_var L)
// largest variance errors; ties go to the lower layer index. Ascending.
std::vector<std::size_t> top_layers(std::span<const double> errors, double p);
std::vector<std::size_t> select_enhanced_layers(const LayerErrors& errors,
                                                double p_mean, double p_var);

// Schedule weights with q_en substituted on the enhanced layers of `hat`.
std::vector<double> layer_weights(const WeightVectorQ& q,
                                  const LayerPartition& partition,
                                  const ModelUpdate& hat,
                                  const ModelUpdate& target);

// ||hat - target||^2 over every parameter.
double matching_loss_unweighted(const ModelUpdate& hat,
                                const ModelUpdate& target);
// sum_l w_l ||hat_l - target_l||^2 with layer_weights().
double matching_loss_weighted(const ModelUpdate& hat, const ModelUpdate& target,
                              const WeightVectorQ& q,
                              const LayerPartition& partition);

// Differentiable sum_l w_l ||hat_l - target_l||^2; weights are constants.
ad::Var matching_loss_var(ad::Tape& tape, const ParamVars& hat,
                          const ModelUpdate& target,
                          std::span<const double> weights);

// ---- replication of local training ---------------------------------------

// The client's local procedure replayed on dummy data, recorded on `tape`.
//   S1: one step on the full batch   S2: E steps on the full batch
//   S3: B steps, mini-batch b being x_chunks[b]
// S4 cannot be replayed; reduce it with approximate_updates() and replay the
// target epoch as S3. Returns the update theta_end - theta_start.
ParamVars replicate_update(ad::Tape& tape, const Architecture& arch,
                           Scenario scenario, const ModelParams& theta_start,
                           const TrainingConfig& config,
                           std::span<const ad::Var> x_chunks,
                           std::span<const ad::Var> y_chunks);

// Value-level convenience: x [N,C,H,W], targets [N,K] in mini-batch order.
ModelUpdate replicate_update(const Architecture& arch, Scenario scenario,
                             const ModelParams& theta_start,
                             const TrainingConfig& config, const Tensor& x,
                             const Tensor& targets);

// ---- the attack -----------------------------------------------------------

// What one RecAttack run matches against: an update to reproduce and how to
// replay the training that produced it.
struct AttackTarget {
  Scenario replicate_as = Scenario::kS1;
  ModelParams start;
  ModelUpdate update;
  TrainingConfig config;

  std::size_t num_samples() const { return config.dataset_size(); }
  std::size_t num_chunks() const;
};

// Exact targets for S1..S3; for S4 the interpolated update of `target_epoch`
// (1-based) replayed as one S3 epoch from the interpolated epoch start.
AttackTarget make_attack_target(const RoundRecord& record, int target_epoch);

enum class LossKind { kUnweighted, kWeighted };

struct AttackConfig {
  int iterations = 1000;
  double lr = 0.1;
  LossKind loss = LossKind::kWeighted;
  int target_epoch = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t init_seed = 0;
  bool optimize_labels = false;
  bool record_trace = true;
};

struct TraceRow {
  int iteration = 0;
  double loss_q = 0.0;
  double loss_m = 0.0;
  std::uint64_t weights_hash = 0;
  double elapsed_seconds = 0.0;
};

struct AttackResult {
  Tensor x_hat;  // [N, C, H, W]
  Tensor y_hat;  // [N, K] label distribution
  double f_value = 0.0;  // ||G(x_hat) - target||^2, +inf when diverged
  bool diverged = false;
  std::vector<TraceRow> trace;
};

// Dummy data starts uniform on [0, 1] (or at `initial_x`); each iteration
// replays training on it, evaluates the (weighted) matching loss and takes
// one Adam step on the dummy images (and label logits when optimized).
// `labels` are the known labels in mini-batch order.
AttackResult rec_attack(const Architecture& arch, const WeightVectorQ& q,
                        const AttackTarget& target, std::span<const int> labels,
                        const AttackConfig& config,
                        const Tensor* initial_x = nullptr);

std::uint64_t hash_weights(std::span<const double> weights);

void write_trace_csv(const std::filesystem::path& path,
                     std::span<const TraceRow> trace);

}  // namespace awa

#endif  // AWA_ATTACK_HPP_
