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

#include "awa/awa.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "awa/rng.hpp"

namespace awa {

AwaResult awa_optimize(const RoundRecord& record, const AttackConfig& atk_in,
                       const AwaBoConfig& bo, std::span<const int> labels) {
  const AttackTarget target = make_attack_target(record, atk_in.target_epoch);
  AttackConfig atk = atk_in;
  atk.loss = LossKind::kWeighted;
  atk.record_trace = false;

  auto f = [&](std::span<const double> u) {
    const WeightVectorQ q = bo.bounds.from_unit(u);
    return rec_attack(record.arch, q, target, labels, atk).f_value;
  };
  BoOptions opt;
  opt.dims = WeightVectorQ::kDims;
  opt.budget = bo.budget;
  opt.initial = bo.initial;
  opt.seed = derive_seed(bo.seed, "bo");
  opt.groups = {{0, 1, 2, 3}, {4, 5}};
  opt.log_objective = bo.log_objective;
  opt.parallel_initial = bo.parallel_initial;
  const BoResult r = bayes_minimize(f, opt);

  AwaResult out;
  for (const Trial& t : r.trials) {
    AwaTrial a;
    a.index = t.index;
    a.phase = t.phase;
    a.q = bo.bounds.from_unit(t.x);
    a.f = t.f;
    a.cumulative_min = t.cumulative_min;
    a.aborted = t.aborted;
    a.fallback = t.fallback;
    a.wall_seconds = t.wall_seconds;
    out.trials.push_back(a);
  }
  if (r.all_aborted) {
    throw AttackFailed("every AWA trial diverged", std::move(out.trials));
  }
  out.q_star = out.trials[r.best].q;
  AttackConfig final_cfg = atk_in;
  final_cfg.loss = LossKind::kWeighted;
  out.final = rec_attack(record.arch, out.q_star, target, labels, final_cfg);
  return out;
}

void write_trials_csv(const std::filesystem::path& path,
                      std::span<const AwaTrial> trials) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "trial,phase,q_cv,q_bn,q_fc,q_en,p_mean,p_var,f,cumulative_min,"
         "aborted,fallback\n";
  char buf[512];
  for (const AwaTrial& t : trials) {
    const auto q = t.q.to_array();
    std::snprintf(buf, sizeof(buf),
                  "%zu,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n",
                  t.index, t.phase == TrialPhase::kRandom ? "random" : "guided",
                  q[0], q[1], q[2], q[3], q[4], q[5], t.f, t.cumulative_min,
                  t.aborted ? 1 : 0, t.fallback ? 1 : 0);
    out << buf;
  }
}

void write_trial_timing_csv(const std::filesystem::path& path,
                            std::span<const AwaTrial> trials) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "trial,wall_s\n";
  char buf[64];
  for (const AwaTrial& t : trials) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", t.index, t.wall_seconds);
    out << buf;
  }
}

}  // namespace awa
