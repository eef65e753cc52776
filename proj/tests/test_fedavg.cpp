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

#include <algorithm>
#include <filesystem>

#include "awa/dataset.hpp"
#include "awa/fedavg.hpp"
#include "awa/params_io.hpp"
#include "test_util.hpp"

namespace awa {
namespace {

struct Fixture {
  BuiltModel model;
  Dataset data;
};

Fixture make_fixture(const char* arch, std::size_t n, std::uint64_t seed = 3) {
  const ImageShape s{3, 6, 6};
  return {build_model(arch, s, 10, seed), make_synthetic_dataset(s, n, 10, seed)};
}

TrainingConfig config(int e, int b, std::size_t m, double lr = 0.01) {
  TrainingConfig c;
  c.epochs = e;
  c.batches = b;
  c.batch_size = m;
  c.lr = lr;
  c.shuffle_seed = 1234;
  return c;
}

ModelParams single_layer(std::vector<double> v) {
  ModelParams p;
  p.arch = "toy";
  p.layers.push_back({LayerKind::kFullyConnected, {Tensor(Shape{v.size()}, v)}});
  return p;
}

TEST(FedSim, ScenarioClassification) {
  EXPECT_EQ(scenario_of(config(1, 1, 4)), Scenario::kS1);
  EXPECT_EQ(scenario_of(config(4, 1, 4)), Scenario::kS2);
  EXPECT_EQ(scenario_of(config(1, 4, 1)), Scenario::kS3);
  EXPECT_EQ(scenario_of(config(2, 2, 2)), Scenario::kS4);
}

TEST(FedSim, IndivisibleDatasetRejected) {
  Fixture f = make_fixture("mlp_small", 5);
  EXPECT_THROW(client_update(f.model.arch, f.model.params, f.data, config(1, 2, 2)),
               std::invalid_argument);
}

TEST(FedSim, ZeroLearningRateIsBitwiseIdentity) {
  Fixture f = make_fixture("cnn_small", 4);
  ClientResult r = client_update(f.model.arch, f.model.params, f.data, config(2, 2, 2, 0.0));
  EXPECT_EQ(r.theta_next, f.model.params);
  EXPECT_EQ(model_update(f.model.params, r.theta_next),
            params_zeros_like(f.model.params));
}

TEST(FedSim, SingleStepEqualsNegativeScaledGradient) {
  Fixture f = make_fixture("cnn_small", 4);
  const TrainingConfig c = config(1, 1, 4, 0.001);
  ClientResult r = client_update(f.model.arch, f.model.params, f.data, c);
  // Gradient oracle on the full batch; the order does not matter for S1.
  ad::Tape t;
  ParamVars pv = params_to_vars(t, f.model.params, true);
  ad::Var loss = forward_loss(f.model.arch, pv, t.constant(f.data.images),
                              t.constant(one_hot(f.data.labels, 10)));
  std::vector<ad::Var> flat;
  for (auto& l : pv) flat.insert(flat.end(), l.begin(), l.end());
  ad::GradResult g = ad::grad(loss, flat, false);
  const ModelUpdate d = model_update(f.model.params, r.theta_next);
  std::size_t k = 0;
  for (const auto& layer : d.layers)
    for (const Tensor& dt : layer.tensors) {
      const Tensor& gt = g.grads[k++].value();
      for (std::size_t i = 0; i < dt.numel(); ++i) EXPECT_NEAR(dt[i], -0.001 * gt[i], 1e-12);
    }
}

TEST(FedSim, TracedReplayReproducesEveryScenario) {
  for (auto [e, b] : {std::pair{1, 1}, {4, 1}, {1, 4}, {2, 2}}) {
    Fixture f = make_fixture("cnn_small", 4, 10 + e * 3 + b);
    const TrainingConfig c = config(e, b, 4 / b);
    ClientResult r = client_update(f.model.arch, f.model.params, f.data, c);
    ASSERT_EQ(r.trace.size(), static_cast<std::size_t>(e));
    ModelParams theta = f.model.params;
    ModelUpdate sum_steps = params_zeros_like(theta);
    for (int ep = 0; ep < e; ++ep) {
      const auto& perm = r.trace[ep];
      std::vector<std::size_t> sorted = perm;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < sorted.size(); ++i) ASSERT_EQ(sorted[i], i);
      for (int mb = 0; mb < b; ++mb) {
        std::span<const std::size_t> idx(perm.data() + mb * c.batch_size, c.batch_size);
        ModelParams next = sgd_step(f.model.arch, theta, f.data.gather(idx),
                                    one_hot(f.data.gather_labels(idx), 10), c.lr);
        sum_steps = params_add(sum_steps, params_sub(next, theta));
        theta = std::move(next);
      }
    }
    EXPECT_LT(params_max_abs_diff(theta, r.theta_next), 1e-10) << e << "," << b;
    EXPECT_LT(params_max_abs_diff(sum_steps, model_update(f.model.params, r.theta_next)),
              1e-10);
  }
}

TEST(FedSim, ShuffleIsSeededPerRoundAndEpoch) {
  EXPECT_EQ(epoch_permutation(5, 0, 1, 16), epoch_permutation(5, 0, 1, 16));
  EXPECT_NE(epoch_permutation(5, 0, 1, 16), epoch_permutation(5, 0, 2, 16));
  EXPECT_NE(epoch_permutation(5, 0, 1, 16), epoch_permutation(5, 1, 1, 16));
  EXPECT_NE(epoch_permutation(5, 0, 1, 16), epoch_permutation(6, 0, 1, 16));
}

TEST(FedSim, ModelUpdateArithmetic) {
  EXPECT_EQ(model_update(single_layer({1, 1}), single_layer({3, 0})),
            single_layer({2, -1}));
}

TEST(FedSim, AggregationWeights) {
  const ClientModel equal[] = {{single_layer({0, 2}), 5}, {single_layer({2, 4}), 5}};
  EXPECT_EQ(server_aggregate(equal), single_layer({1, 3}));
  const ClientModel skewed[] = {{single_layer({4, 0}), 1}, {single_layer({0, 4}), 3}};
  EXPECT_EQ(server_aggregate(skewed), single_layer({1, 3}));
  const ClientModel one[] = {{single_layer({0.1, 0.7}), 9}};
  EXPECT_EQ(server_aggregate(one), single_layer({0.1, 0.7}));
  EXPECT_THROW(server_aggregate(std::span<const ClientModel>{}), std::invalid_argument);
}

TEST(FedSim, AggregationOfIdenticalInputsIsExact) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    ModelParams p = build_model("mlp_small", {1, 3, 3}, 4, rng.next()).params;
    std::vector<ClientModel> clients;
    for (std::size_t k = 0; k < 1 + rng.below(5); ++k) clients.push_back({p, 1 + rng.below(7)});
    EXPECT_EQ(server_aggregate(clients), p);
  }
}

TEST(FedSim, AggregationIsConvexCombination) {
  Rng rng(9);
  const ModelParams a = build_model("linear", {1, 2, 2}, 3, 1).params;
  const ModelParams b = build_model("linear", {1, 2, 2}, 3, 2).params;
  const std::size_t na = 1 + rng.below(10), nb = 1 + rng.below(10);
  const ClientModel clients[] = {{a, na}, {b, nb}};
  const ModelParams agg = server_aggregate(clients);
  const double wa = static_cast<double>(na) / (na + nb);
  const ModelParams expect = params_add(params_scale(a, wa), params_scale(b, 1 - wa));
  EXPECT_LT(params_max_abs_diff(agg, expect), 1e-15);
}

TEST(FedSim, RoundRecordPersistsExactly) {
  Fixture f = make_fixture("cnn_small", 4);
  RoundRecord rec;
  rec.arch = f.model.arch;
  rec.config = config(2, 2, 2, 0.001);
  rec.config.round = 3;
  rec.theta_start = f.model.params;
  rec.theta_end = client_update(rec.arch, rec.theta_start, f.data, rec.config).theta_next;
  rec.n = 4;
  const auto dir = std::filesystem::temp_directory_path() / "awa_round_test";
  std::filesystem::create_directories(dir);
  save_round(dir, rec);
  const RoundRecord back = load_round(dir);
  EXPECT_EQ(back.theta_start, rec.theta_start);
  EXPECT_EQ(back.theta_end, rec.theta_end);
  EXPECT_EQ(back.config.epochs, 2);
  EXPECT_EQ(back.config.batches, 2);
  EXPECT_EQ(back.config.batch_size, 2u);
  EXPECT_EQ(back.config.lr, 0.001);
  EXPECT_EQ(back.config.shuffle_seed, 1234u);
  EXPECT_EQ(back.config.round, 3u);
  EXPECT_EQ(back.arch.name, "cnn_small");
  EXPECT_EQ(back.n, 4u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace awa
