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

#include "awa/attack.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "awa/adam.hpp"
#include "awa/rng.hpp"

namespace awa {

WeightVectorQ WeightVectorQ::from_array(std::span<const double> a) {
  if (a.size() != kDims) {
    throw std::invalid_argument("Q needs 6 components, got " +
                                std::to_string(a.size()));
  }
  return {a[0], a[1], a[2], a[3], a[4], a[5]};
}

bool QBounds::contains(const WeightVectorQ& q) const {
  const auto v = q.to_array();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= lo[i] && v[i] <= hi[i])) return false;
  }
  return true;
}

WeightVectorQ QBounds::from_unit(std::span<const double> u) const {
  std::array<double, WeightVectorQ::kDims> v{};
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = lo[i] + std::clamp(u[i], 0.0, 1.0) * (hi[i] - lo[i]);
  }
  return WeightVectorQ::from_array(v);
}

std::array<double, WeightVectorQ::kDims> QBounds::to_unit(
    const WeightVectorQ& q) const {
  const auto v = q.to_array();
  std::array<double, WeightVectorQ::kDims> u{};
  for (std::size_t i = 0; i < v.size(); ++i) {
    u[i] = hi[i] > lo[i] ? (v[i] - lo[i]) / (hi[i] - lo[i]) : 0.0;
  }
  return u;
}

// ---- interpolation --------------------------------------------------------

ModelParams interpolate_params(const ModelParams& theta_t,
                               const ModelParams& theta_next, int epochs,
                               int e) {
  if (epochs < 1) throw std::invalid_argument("interpolation needs E >= 1");
  if (e < 0 || e > epochs) throw std::out_of_range("epoch outside 0..E");
  if (e == 0) return theta_t;
  const ModelParams slope =
      params_scale(params_sub(theta_next, theta_t), 1.0 / epochs);
  return params_add(params_scale(slope, static_cast<double>(e)), theta_t);
}

ApproxUpdates approximate_updates(const ModelParams& theta_t,
                                  const ModelParams& theta_next, int epochs) {
  if (epochs < 1) {
    throw std::invalid_argument("approximate_updates: E must be >= 1, got " +
                                std::to_string(epochs));
  }
  require_same_layout("approximate_updates", theta_t, theta_next);
  // Every epoch gets the same slice (theta_next - theta_t) / E.
  const ModelUpdate total = params_sub(theta_next, theta_t);
  const ModelUpdate slice = params_scale(total, 1.0 / epochs);
  ApproxUpdates out;
  out.per_epoch.assign(static_cast<std::size_t>(epochs), slice);
  return out;
}

// ---- layer weights --------------------------------------------------------

std::vector<double> weight_schedule(const WeightVectorQ& q,
                                    const LayerPartition& partition,
                                    std::size_t num_layers) {
  std::vector<double> w(num_layers, 1.0);
  auto apply = [&](const std::vector<std::size_t>& layers, double top) {
    const std::size_t count = layers.size();
    if (count == 1) {
      w.at(layers[0]) = top;
      return;
    }
    for (std::size_t r = 0; r < count; ++r) {
      w.at(layers[r]) =
          (top - 1.0) / static_cast<double>(count - 1) * static_cast<double>(r) +
          1.0;
    }
  };
  apply(partition.conv, q.q_cv);
  apply(partition.batch_norm, q.q_bn);
  apply(partition.fully_connected, q.q_fc);
  return w;
}

namespace {

void layer_moments(const LayerParams& layer, double& mean, double& var) {
  const std::size_t n = layer.numel();
  double s = 0.0;
  for (const Tensor& t : layer.tensors)
    for (double v : t.data()) s += v;
  mean = n ? s / static_cast<double>(n) : 0.0;
  double ss = 0.0;
  for (const Tensor& t : layer.tensors)
    for (double v : t.data()) ss += (v - mean) * (v - mean);
  var = n ? ss / static_cast<double>(n) : 0.0;
}

}  // namespace

LayerErrors relative_errors(const ModelUpdate& hat, const ModelUpdate& target) {
  require_same_layout("relative_errors", hat, target);
  LayerErrors e;
  for (std::size_t l = 0; l < hat.layers.size(); ++l) {
    double mh, vh, mt, vt;
    layer_moments(hat.layers[l], mh, vh);
    layer_moments(target.layers[l], mt, vt);
    e.mean.push_back(std::abs(mh - mt) /
                     std::max(std::abs(mt), kRelativeErrorFloor));
    e.var.push_back(std::abs(vh - vt) /
                    std::max(std::abs(vt), kRelativeErrorFloor));
  }
  return e;
}

std::vector<std::size_t> top_layers(std::span<const double> errors, double p) {
  const std::size_t L = errors.size();
  // Guard against p*L landing a rounding error above an integer.
  const double want = std::ceil(std::max(p, 0.0) * static_cast<double>(L) - 1e-9);
  const std::size_t count = std::min(L, static_cast<std::size_t>(std::max(want, 0.0)));
  std::vector<std::size_t> idx(L);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return errors[a] > errors[b];
  });
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> select_enhanced_layers(const LayerErrors& errors,
                                                double p_mean, double p_var) {
  const auto pm = top_layers(errors.mean, p_mean);
  const auto pv = top_layers(errors.var, p_var);
  std::vector<std::size_t> both;
  std::set_intersection(pm.begin(), pm.end(), pv.begin(), pv.end(),
                        std::back_inserter(both));
  return both;
}

std::vector<double> layer_weights(const WeightVectorQ& q,
                                  const LayerPartition& partition,
                                  const ModelUpdate& hat,
                                  const ModelUpdate& target) {
  std::vector<double> w = weight_schedule(q, partition, target.num_layers());
  if (q.p_mean > 0.0 && q.p_var > 0.0) {
    for (std::size_t l : select_enhanced_layers(relative_errors(hat, target),
                                                q.p_mean, q.p_var)) {
      w[l] = q.q_en;
    }
  }
  return w;
}

namespace {

double weighted_sq_diff(const ModelUpdate& hat, const ModelUpdate& target,
                        std::span<const double> weights) {
  require_same_layout("matching_loss", hat, target);
  double total = 0.0;
  for (std::size_t l = 0; l < hat.layers.size(); ++l) {
    double s = 0.0;
    for (std::size_t k = 0; k < hat.layers[l].tensors.size(); ++k) {
      const Tensor& a = hat.layers[l].tensors[k];
      const Tensor& b = target.layers[l].tensors[k];
      for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
      }
    }
    total += (weights.empty() ? 1.0 : weights[l]) * s;
  }
  return total;
}

}  // namespace

double matching_loss_unweighted(const ModelUpdate& hat,
                                const ModelUpdate& target) {
  return weighted_sq_diff(hat, target, {});
}

double matching_loss_weighted(const ModelUpdate& hat, const ModelUpdate& target,
                              const WeightVectorQ& q,
                              const LayerPartition& partition) {
  const auto w = layer_weights(q, partition, hat, target);
  return weighted_sq_diff(hat, target, w);
}

ad::Var matching_loss_var(ad::Tape& tape, const ParamVars& hat,
                          const ModelUpdate& target,
                          std::span<const double> weights) {
  if (hat.size() != target.layers.size() || weights.size() != hat.size()) {
    throw std::invalid_argument("matching_loss: layer count mismatch");
  }
  ad::Var total;
  for (std::size_t l = 0; l < hat.size(); ++l) {
    if (hat[l].size() != target.layers[l].tensors.size()) {
      throw std::invalid_argument("matching_loss: tensor count mismatch");
    }
    ad::Var layer;
    for (std::size_t k = 0; k < hat[l].size(); ++k) {
      ad::Var d = ad::sub(hat[l][k], tape.constant(target.layers[l].tensors[k]));
      ad::Var sq = ad::sum_of_squares(d);
      layer = layer.valid() ? ad::add(layer, sq) : sq;
    }
    ad::Var term = ad::scale(layer, weights[l]);
    total = total.valid() ? ad::add(total, term) : term;
  }
  return total;
}

// ---- replication ----------------------------------------------------------

namespace {

ParamVars sgd_step_var(const Architecture& arch, const ParamVars& theta,
                       ad::Var x, ad::Var y, double lr) {
  ad::Var loss = forward_loss(arch, theta, x, y);
  std::vector<ad::Var> flat;
  for (const auto& l : theta) flat.insert(flat.end(), l.begin(), l.end());
  ad::GradResult g = ad::grad(loss, flat, /*create_graph=*/true);
  ParamVars next = theta;
  std::size_t k = 0;
  for (auto& l : next)
    for (ad::Var& v : l) v = ad::sub(v, ad::scale(g.grads[k++], lr));
  return next;
}

}  // namespace

ParamVars replicate_update(ad::Tape& tape, const Architecture& arch,
                           Scenario scenario, const ModelParams& theta_start,
                           const TrainingConfig& config,
                           std::span<const ad::Var> x_chunks,
                           std::span<const ad::Var> y_chunks) {
  if (scenario == Scenario::kS4) {
    throw std::invalid_argument(
        "replicate_update: Scenario 4 (E > 1, B > 1) cannot be replayed "
        "because the per-epoch shuffles are unknown; build per-epoch targets "
        "with approximate_updates() and replay one epoch as Scenario 3");
  }
  if (x_chunks.size() != y_chunks.size() || x_chunks.empty()) {
    throw std::invalid_argument("replicate_update: mismatched dummy chunks");
  }
  const std::size_t want_chunks =
      scenario == Scenario::kS3 ? static_cast<std::size_t>(config.batches) : 1;
  if (x_chunks.size() != want_chunks) {
    throw std::invalid_argument("replicate_update: " +
                                std::to_string(x_chunks.size()) +
                                " dummy chunks, scenario needs " +
                                std::to_string(want_chunks));
  }
  ParamVars start = params_to_vars(tape, theta_start, true);
  ParamVars theta = start;
  switch (scenario) {
    case Scenario::kS1:
      theta = sgd_step_var(arch, theta, x_chunks[0], y_chunks[0], config.lr);
      break;
    case Scenario::kS2:
      for (int e = 0; e < config.epochs; ++e) {
        theta = sgd_step_var(arch, theta, x_chunks[0], y_chunks[0], config.lr);
      }
      break;
    case Scenario::kS3:
      for (std::size_t b = 0; b < x_chunks.size(); ++b) {
        theta = sgd_step_var(arch, theta, x_chunks[b], y_chunks[b], config.lr);
      }
      break;
    case Scenario::kS4:
      break;
  }
  ParamVars delta = theta;
  for (std::size_t l = 0; l < delta.size(); ++l)
    for (std::size_t k = 0; k < delta[l].size(); ++k)
      delta[l][k] = ad::sub(theta[l][k], start[l][k]);
  return delta;
}

namespace {

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t count) {
  Shape s = t.shape();
  const std::size_t per = t.numel() / s[0];
  s[0] = count;
  std::vector<double> data(t.data().begin() + begin * per,
                           t.data().begin() + (begin + count) * per);
  return Tensor(std::move(s), std::move(data));
}

ModelUpdate update_values(const ModelParams& layout, const ParamVars& vars) {
  return vars_to_params(layout.arch, layout, vars);
}

}  // namespace

ModelUpdate replicate_update(const Architecture& arch, Scenario scenario,
                             const ModelParams& theta_start,
                             const TrainingConfig& config, const Tensor& x,
                             const Tensor& targets) {
  ad::Tape tape;
  std::vector<ad::Var> xs, ys;
  const std::size_t chunks =
      scenario == Scenario::kS3 ? static_cast<std::size_t>(config.batches) : 1;
  const std::size_t per = x.dim(0) / chunks;
  for (std::size_t b = 0; b < chunks; ++b) {
    xs.push_back(tape.variable(slice_rows(x, b * per, per)));
    ys.push_back(tape.constant(slice_rows(targets, b * per, per)));
  }
  ParamVars d = replicate_update(tape, arch, scenario, theta_start, config, xs, ys);
  return update_values(theta_start, d);
}

// ---- the attack -----------------------------------------------------------

std::size_t AttackTarget::num_chunks() const {
  return replicate_as == Scenario::kS3 ? static_cast<std::size_t>(config.batches)
                                       : 1;
}

AttackTarget make_attack_target(const RoundRecord& record, int target_epoch) {
  AttackTarget t;
  t.config = record.config;
  const Scenario s = scenario_of(record.config);
  if (s != Scenario::kS4) {
    t.replicate_as = s;
    t.start = record.theta_start;
    t.update = model_update(record);
    return t;
  }
  const int E = record.config.epochs;
  if (target_epoch < 1 || target_epoch > E) {
    throw std::out_of_range("target epoch " + std::to_string(target_epoch) +
                            " outside 1.." + std::to_string(E));
  }
  ApproxUpdates approx =
      approximate_updates(record.theta_start, record.theta_end, E);
  t.replicate_as = Scenario::kS3;
  t.start = interpolate_params(record.theta_start, record.theta_end, E,
                               target_epoch - 1);
  t.update = std::move(approx.per_epoch[static_cast<std::size_t>(target_epoch - 1)]);
  t.config.epochs = 1;
  return t;
}

std::uint64_t hash_weights(std::span<const double> weights) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double w : weights) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &w, sizeof(double));
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

namespace {

struct DummyState {
  std::vector<Tensor> x_chunks;
  std::vector<Tensor> label_logits;  // only when labels are optimized
  std::vector<Tensor> fixed_targets;
};

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

// Records the dummy data on `tape` and returns (x vars, y vars, label vars).
void record_dummy(ad::Tape& tape, const DummyState& s, bool optimize_labels,
                  std::vector<ad::Var>& xs, std::vector<ad::Var>& ys,
                  std::vector<ad::Var>& logits) {
  for (std::size_t b = 0; b < s.x_chunks.size(); ++b) {
    xs.push_back(tape.variable(s.x_chunks[b]));
    if (optimize_labels) {
      logits.push_back(tape.variable(s.label_logits[b]));
      ys.push_back(ad::softmax_rows(logits.back()));
    } else {
      ys.push_back(tape.constant(s.fixed_targets[b]));
    }
  }
}

}  // namespace

AttackResult rec_attack(const Architecture& arch, const WeightVectorQ& q,
                        const AttackTarget& target, std::span<const int> labels,
                        const AttackConfig& config, const Tensor* initial_x) {
  if (config.iterations < 1) throw std::invalid_argument("N_AT must be >= 1");
  if (!(config.lr > 0.0)) throw std::invalid_argument("attack lr must be > 0");
  const std::size_t n = target.num_samples();
  const std::size_t chunks = target.num_chunks();
  const std::size_t per = n / chunks;
  const ImageShape& in = arch.input;
  const std::size_t K = arch.classes;
  if (labels.size() != n) {
    throw std::invalid_argument("rec_attack: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(n) + " samples");
  }
  const LayerPartition partition = layer_partition(arch);
  const std::size_t L = arch.num_layers();
  const std::vector<double> base = weight_schedule(q, partition, L);
  const bool weighted = config.loss == LossKind::kWeighted;
  const std::vector<double> ones(L, 1.0);

  DummyState s;
  Rng rng(derive_seed(config.init_seed, "dummy-init"));
  const Tensor all_targets = one_hot(labels, K);
  for (std::size_t b = 0; b < chunks; ++b) {
    Tensor x(Shape{per, in.channels, in.height, in.width});
    if (initial_x) {
      if (initial_x->numel() != n * in.numel()) {
        throw ShapeError("rec_attack: initial dummy has shape " +
                         shape_string(initial_x->shape()));
      }
      std::copy_n(initial_x->data().begin() + b * x.numel(), x.numel(),
                  x.data().begin());
    } else {
      for (double& v : x.data()) v = rng.uniform();
    }
    s.x_chunks.push_back(std::move(x));
    s.fixed_targets.push_back(slice_rows(all_targets, b * per, per));
    if (config.optimize_labels) s.label_logits.emplace_back(Shape{per, K}, 0.0);
  }

  AdamOptions aopt{config.lr, config.beta1, config.beta2, config.eps};
  Adam adam_x(n * in.numel(), aopt);
  Adam adam_y(config.optimize_labels ? n * K : 0, aopt);
  std::vector<double> flat_x(n * in.numel()), flat_gx(flat_x.size());

  AttackResult result;
  const auto t0 = std::chrono::steady_clock::now();

  for (int it = 0; it < config.iterations; ++it) {
    ad::Tape tape;
    std::vector<ad::Var> xs, ys, logits;
    record_dummy(tape, s, config.optimize_labels, xs, ys, logits);
    ParamVars hat = replicate_update(tape, arch, target.replicate_as,
                                     target.start, target.config, xs, ys);
    const ModelUpdate hat_values = update_values(target.start, hat);
    std::vector<double> w = base;
    if (weighted) {
      if (q.p_mean > 0.0 && q.p_var > 0.0) {
        for (std::size_t l : select_enhanced_layers(
                 relative_errors(hat_values, target.update), q.p_mean,
                 q.p_var)) {
          w[l] = q.q_en;
        }
      }
    } else {
      w = ones;
    }
    ad::Var loss = matching_loss_var(tape, hat, target.update, w);
    const double loss_q = loss.value().item();
    if (config.record_trace) {
      TraceRow row;
      row.iteration = it;
      row.loss_q = loss_q;
      row.loss_m = weighted ? matching_loss_unweighted(hat_values, target.update)
                            : loss_q;
      row.weights_hash = hash_weights(w);
      row.elapsed_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      result.trace.push_back(row);
    }
    if (!std::isfinite(loss_q)) {
      result.diverged = true;
      break;
    }
    std::vector<ad::Var> wrt = xs;
    wrt.insert(wrt.end(), logits.begin(), logits.end());
    ad::GradResult g = ad::grad(loss, wrt, /*create_graph=*/false);

    for (std::size_t b = 0; b < chunks; ++b) {
      const Tensor& gb = g.grads[b].value();
      std::copy(gb.data().begin(), gb.data().end(),
                flat_gx.begin() + b * gb.numel());
      std::copy(s.x_chunks[b].data().begin(), s.x_chunks[b].data().end(),
                flat_x.begin() + b * gb.numel());
    }
    if (!all_finite(flat_gx)) {
      result.diverged = true;
      break;
    }
    adam_x.step(flat_x, flat_gx);
    for (std::size_t b = 0; b < chunks; ++b) {
      const std::size_t sz = s.x_chunks[b].numel();
      std::copy_n(flat_x.begin() + b * sz, sz, s.x_chunks[b].data().begin());
    }
    if (config.optimize_labels) {
      std::vector<double> fy, gy;
      for (std::size_t b = 0; b < chunks; ++b) {
        const Tensor& gb = g.grads[chunks + b].value();
        gy.insert(gy.end(), gb.data().begin(), gb.data().end());
        fy.insert(fy.end(), s.label_logits[b].data().begin(),
                  s.label_logits[b].data().end());
      }
      adam_y.step(fy, gy);
      for (std::size_t b = 0; b < chunks; ++b) {
        const std::size_t sz = s.label_logits[b].numel();
        std::copy_n(fy.begin() + b * sz, sz, s.label_logits[b].data().begin());
      }
    }
  }

  // Final reconstruction and f(Q) = ||G(x_hat) - target||^2.
  result.x_hat = Tensor(Shape{n, in.channels, in.height, in.width});
  result.y_hat = Tensor(Shape{n, K});
  {
    ad::Tape tape;
    std::vector<ad::Var> xs, ys, logits;
    record_dummy(tape, s, config.optimize_labels, xs, ys, logits);
    for (std::size_t b = 0; b < chunks; ++b) {
      std::copy(s.x_chunks[b].data().begin(), s.x_chunks[b].data().end(),
                result.x_hat.data().begin() + b * s.x_chunks[b].numel());
      const Tensor& yb = ys[b].value();
      std::copy(yb.data().begin(), yb.data().end(),
                result.y_hat.data().begin() + b * yb.numel());
    }
    if (!result.diverged) {
      ParamVars hat = replicate_update(tape, arch, target.replicate_as,
                                       target.start, target.config, xs, ys);
      result.f_value =
          matching_loss_unweighted(update_values(target.start, hat), target.update);
    }
  }
  if (result.diverged || !std::isfinite(result.f_value)) {
    result.diverged = true;
    result.f_value = std::numeric_limits<double>::infinity();
  }
  return result;
}

void write_trace_csv(const std::filesystem::path& path,
                     std::span<const TraceRow> trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,loss_q,loss_m,weights_hash,elapsed_s\n";
  char buf[160];
  for (const TraceRow& r : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%016llx,%.6f\n",
                  r.iteration, r.loss_q, r.loss_m,
                  static_cast<unsigned long long>(r.weights_hash),
                  r.elapsed_seconds);
    out << buf;
  }
}

}  // namespace awa
