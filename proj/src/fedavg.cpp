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

#include "awa/fedavg.hpp"

#include <fstream>
#include <stdexcept>

#include "awa/params_io.hpp"
#include "awa/rng.hpp"
#include "json.hpp"

namespace awa {

ImageShape Dataset::image_shape() const {
  if (images.rank() != 4) throw ShapeError("dataset images must be rank 4");
  return {images.dim(1), images.dim(2), images.dim(3)};
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const {
  const ImageShape s = image_shape();
  const std::size_t per = s.numel();
  Tensor out(Shape{indices.size(), s.channels, s.height, s.width});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw std::out_of_range("sample index");
    std::copy_n(images.data().begin() + indices[i] * per, per,
                out.data().begin() + i * per);
  }
  return out;
}

std::vector<int> Dataset::gather_labels(
    std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

Tensor Dataset::image(std::size_t i) const {
  const ImageShape s = image_shape();
  const std::size_t idx[1] = {i};
  return gather(idx).reshaped(Shape{s.channels, s.height, s.width});
}

void TrainingConfig::validate(std::size_t n) const {
  if (epochs < 1) throw std::invalid_argument("epochs E must be >= 1");
  if (batches < 1) throw std::invalid_argument("mini-batches B must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size M must be >= 1");
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (n != dataset_size()) {
    throw std::invalid_argument(
        "dataset of " + std::to_string(n) + " samples is not B*M = " +
        std::to_string(batches) + "*" + std::to_string(batch_size));
  }
}

std::vector<std::size_t> epoch_permutation(std::uint64_t shuffle_seed,
                                           std::uint64_t round,
                                           std::uint64_t epoch,
                                           std::size_t n) {
  Rng rng(derive_seed(shuffle_seed, "shuffle", round, epoch));
  return rng.permutation(n);
}

ModelParams sgd_step(const Architecture& arch, const ModelParams& theta,
                     const Tensor& x, const Tensor& targets, double lr) {
  ad::Tape tape;
  ParamVars pv = params_to_vars(tape, theta, true);
  ad::Var loss =
      forward_loss(arch, pv, tape.constant(x), tape.constant(targets));
  std::vector<ad::Var> flat;
  for (const auto& l : pv) flat.insert(flat.end(), l.begin(), l.end());
  ad::GradResult g = ad::grad(loss, flat, false);
  ModelParams next = theta;
  std::size_t k = 0;
  for (LayerParams& l : next.layers)
    for (Tensor& t : l.tensors) {
      const Tensor& gt = g.grads[k++].value();
      for (std::size_t i = 0; i < t.numel(); ++i) t[i] -= lr * gt[i];
    }
  return next;
}

ClientResult client_update(const Architecture& arch, const ModelParams& theta,
                           const Dataset& data, const TrainingConfig& config) {
  config.validate(data.size());
  ClientResult result{theta, {}};
  const std::size_t n = data.size();
  const std::size_t m = config.batch_size;
  for (int e = 0; e < config.epochs; ++e) {
    auto perm = epoch_permutation(config.shuffle_seed, config.round,
                                  static_cast<std::uint64_t>(e), n);
    for (int b = 0; b < config.batches; ++b) {
      std::span<const std::size_t> idx(perm.data() + b * m, m);
      Tensor x = data.gather(idx);
      std::vector<int> y = data.gather_labels(idx);
      result.theta_next = sgd_step(arch, result.theta_next, x,
                                   one_hot(y, data.classes), config.lr);
    }
    result.trace.push_back(std::move(perm));
  }
  return result;
}

ModelUpdate model_update(const ModelParams& theta_start,
                         const ModelParams& theta_end) {
  require_same_layout("model_update", theta_start, theta_end);
  return params_sub(theta_end, theta_start);
}

ModelParams server_aggregate(std::span<const ClientModel> clients) {
  if (clients.empty()) {
    throw std::invalid_argument("server_aggregate: no client models");
  }
  std::size_t total = 0;
  for (const ClientModel& c : clients) {
    if (c.n == 0) throw std::invalid_argument("server_aggregate: N_k = 0");
    require_same_layout("server_aggregate", clients.front().params, c.params);
    total += c.n;
  }
  bool identical = true;
  for (const ClientModel& c : clients) {
    identical = identical && c.params == clients.front().params;
  }
  if (identical) return clients.front().params;
  ModelParams out = params_zeros_like(clients.front().params);
  for (const ClientModel& c : clients) {
    const double w = static_cast<double>(c.n) / static_cast<double>(total);
    out = params_add(out, params_scale(c.params, w));
  }
  return out;
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kS1: return "S1";
    case Scenario::kS2: return "S2";
    case Scenario::kS3: return "S3";
    case Scenario::kS4: return "S4";
  }
  return "?";
}

Scenario scenario_of(const TrainingConfig& config) {
  const bool multi_epoch = config.epochs > 1;
  const bool multi_batch = config.batches > 1;
  if (!multi_epoch && !multi_batch) return Scenario::kS1;
  if (multi_epoch && !multi_batch) return Scenario::kS2;
  if (!multi_epoch) return Scenario::kS3;
  return Scenario::kS4;
}

void save_round(const std::filesystem::path& dir, const RoundRecord& record) {
  std::filesystem::create_directories(dir);
  save_params(dir / "theta_start.bin", record.theta_start);
  save_params(dir / "theta_end.bin", record.theta_end);
  nlohmann::ordered_json j;
  j["E"] = record.config.epochs;
  j["B"] = record.config.batches;
  j["eta"] = record.config.lr;
  j["M"] = record.config.batch_size;
  j["N"] = record.n;
  j["shuffle_seed"] = record.config.shuffle_seed;
  j["round"] = record.config.round;
  j["arch"] = record.arch.name;
  j["channels"] = record.arch.input.channels;
  j["height"] = record.arch.input.height;
  j["width"] = record.arch.input.width;
  j["classes"] = record.arch.classes;
  std::ofstream out(dir / "round.json");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + (dir / "round.json").string());
}

RoundRecord load_round(const std::filesystem::path& dir) {
  std::ifstream in(dir / "round.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "round.json").string());
  const nlohmann::json j = nlohmann::json::parse(in);
  RoundRecord r;
  r.config.epochs = j.at("E").get<int>();
  r.config.batches = j.at("B").get<int>();
  r.config.lr = j.at("eta").get<double>();
  r.config.batch_size = j.at("M").get<std::size_t>();
  r.config.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
  r.config.round = j.value("round", std::uint64_t{0});
  r.n = j.at("N").get<std::size_t>();
  ImageShape shape{j.at("channels").get<std::size_t>(),
                   j.at("height").get<std::size_t>(),
                   j.at("width").get<std::size_t>()};
  r.arch = make_architecture(j.at("arch").get<std::string>(), shape,
                             j.at("classes").get<std::size_t>());
  r.config.validate(r.n);
  r.theta_start = load_params(dir / "theta_start.bin");
  r.theta_end = load_params(dir / "theta_end.bin");
  require_same_layout("load_round", r.theta_start, r.theta_end);
  if (r.theta_start.arch != r.arch.name) {
    throw std::runtime_error("parameter files hold '" + r.theta_start.arch +
                             "' but round.json names '" + r.arch.name + "'");
  }
  return r;
}

}  // namespace awa
