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

#include "awa/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "awa/dataset.hpp"
#include "awa/image_io.hpp"
#include "awa/params_io.hpp"
#include "awa/rng.hpp"
#include "json.hpp"

namespace awa {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

TrainingConfig ExperimentConfig::training() const {
  TrainingConfig t;
  t.epochs = epochs;
  t.batches = batches;
  t.lr = lr;
  t.batch_size = batch_size;
  t.shuffle_seed = derive_seed(seed, "shuffle");
  t.round = static_cast<std::uint64_t>(warmup_rounds);
  return t;
}

fs::path ExperimentConfig::round_path() const {
  return round_dir.empty() ? out_dir / "round" : round_dir;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  try {
    make_architecture(arch, shape, classes);
  } catch (const std::exception& e) {
    fail(std::string("model: ") + e.what());
  }
  if (shape.numel() == 0) fail("model: channels, height and width must be > 0");
  if (n == 0) fail("training.n must be > 0");
  if (epochs < 1) fail("training.epochs must be >= 1");
  if (batches < 1) fail("training.batches must be >= 1");
  if (static_cast<std::size_t>(batches) * batch_size != n) {
    fail("training: n = " + std::to_string(n) + " but batches * batch_size = " +
         std::to_string(batches) + " * " + std::to_string(batch_size));
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("training.lr must be >= 0");
  if (warmup_rounds < 0) fail("training.warmup_rounds must be >= 0");
  if (attack_iterations < 1) fail("attack.iterations must be >= 1");
  if (!(attack_lr > 0.0)) fail("attack.lr must be > 0");
  if (target_epoch < 1 || target_epoch > epochs) {
    fail("attack.target_epoch must be in 1.." + std::to_string(epochs));
  }
  if (q && !bounds.contains(*q)) fail("attack.q lies outside the search box");
  if (bo_initial < 2 || bo_budget <= bo_initial) {
    fail("bo: need budget > initial >= 2");
  }
  for (std::size_t i = 0; i < WeightVectorQ::kDims; ++i) {
    if (!(bounds.lo[i] <= bounds.hi[i])) fail("bo: lower bound above upper bound");
  }
  if (n > kMaxMatchBatch) fail("training.n must be <= 16 for matched metrics");
  if (data_source == "directory") {
    if (data_dir.empty()) fail("data.dir is required for source = directory");
    if (!fs::is_directory(data_dir)) fail("data.dir not found: " + data_dir.string());
  } else if (data_source != "synthetic") {
    fail("data.source must be synthetic or directory, got '" + data_source + "'");
  }
  if (!round_dir.empty() && !fs::exists(round_dir / "round.json")) {
    fail("run.round has no round.json: " + round_dir.string());
  }
}

// ---- INI ------------------------------------------------------------------

namespace {

template <class T>
T convert(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (!in || !(in >> std::ws).eof()) {
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  }
  return out;
}

template <>
bool convert<bool>(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + value + "'");
}

template <>
std::string convert<std::string>(const std::string&, const std::string& value) {
  return value;
}

}  // namespace

std::vector<double> parse_q_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(convert<double>("q", item));
  if (out.size() != WeightVectorQ::kDims) {
    throw ConfigError("Q needs 6 comma-separated values, got " +
                      std::to_string(out.size()));
  }
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"model.arch", [&](auto& k, auto& v) { c.arch = convert<std::string>(k, v); }},
      {"model.channels", [&](auto& k, auto& v) { c.shape.channels = convert<std::size_t>(k, v); }},
      {"model.height", [&](auto& k, auto& v) { c.shape.height = convert<std::size_t>(k, v); }},
      {"model.width", [&](auto& k, auto& v) { c.shape.width = convert<std::size_t>(k, v); }},
      {"model.classes", [&](auto& k, auto& v) { c.classes = convert<std::size_t>(k, v); }},
      {"training.n", [&](auto& k, auto& v) { c.n = convert<std::size_t>(k, v); }},
      {"training.epochs", [&](auto& k, auto& v) { c.epochs = convert<int>(k, v); }},
      {"training.batches", [&](auto& k, auto& v) { c.batches = convert<int>(k, v); }},
      {"training.batch_size", [&](auto& k, auto& v) { c.batch_size = convert<std::size_t>(k, v); }},
      {"training.lr", [&](auto& k, auto& v) { c.lr = convert<double>(k, v); }},
      {"training.warmup_rounds", [&](auto& k, auto& v) { c.warmup_rounds = convert<int>(k, v); }},
      {"attack.iterations", [&](auto& k, auto& v) { c.attack_iterations = convert<int>(k, v); }},
      {"attack.lr", [&](auto& k, auto& v) { c.attack_lr = convert<double>(k, v); }},
      {"attack.loss", [&](auto& k, auto& v) {
         if (v == "weighted") c.loss = LossKind::kWeighted;
         else if (v == "unweighted") c.loss = LossKind::kUnweighted;
         else throw ConfigError(k + " must be weighted or unweighted, got '" + v + "'");
       }},
      {"attack.target_epoch", [&](auto& k, auto& v) { c.target_epoch = convert<int>(k, v); }},
      {"attack.optimize_labels", [&](auto& k, auto& v) { c.optimize_labels = convert<bool>(k, v); }},
      {"attack.q", [&](auto&, auto& v) { c.q = WeightVectorQ::from_array(parse_q_list(v)); }},
      {"bo.budget", [&](auto& k, auto& v) { c.bo_budget = convert<std::size_t>(k, v); }},
      {"bo.initial", [&](auto& k, auto& v) { c.bo_initial = convert<std::size_t>(k, v); }},
      {"bo.seed", [&](auto& k, auto& v) { c.bo_seed = convert<std::uint64_t>(k, v); }},
      {"bo.log_objective", [&](auto& k, auto& v) { c.log_objective = convert<bool>(k, v); }},
      {"bo.parallel_initial", [&](auto& k, auto& v) { c.parallel_initial = convert<bool>(k, v); }},
      {"bo.q_min", [&](auto& k, auto& v) { std::fill_n(c.bounds.lo.begin(), 4, convert<double>(k, v)); }},
      {"bo.q_max", [&](auto& k, auto& v) { std::fill_n(c.bounds.hi.begin(), 4, convert<double>(k, v)); }},
      {"bo.p_min", [&](auto& k, auto& v) { std::fill_n(c.bounds.lo.begin() + 4, 2, convert<double>(k, v)); }},
      {"bo.p_max", [&](auto& k, auto& v) { std::fill_n(c.bounds.hi.begin() + 4, 2, convert<double>(k, v)); }},
      {"data.source", [&](auto& k, auto& v) { c.data_source = convert<std::string>(k, v); }},
      {"data.dir", [&](auto&, auto& v) { c.data_dir = v; }},
      {"run.seed", [&](auto& k, auto& v) { c.seed = convert<std::uint64_t>(k, v); }},
      {"run.out", [&](auto&, auto& v) { c.out_dir = v; }},
      {"run.round", [&](auto&, auto& v) { c.round_dir = v; }},
      {"run.case", [&](auto& k, auto& v) { c.case_id = convert<int>(k, v); }},
  };
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' must sit inside a section");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      auto it = setters.find(full);
      if (it == setters.end()) throw ConfigError("unknown config key " + full);
      it->second(full, value.data());
    }
  }
  if (c.case_id != 0) apply_case(c, c.case_id);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_case(ExperimentConfig& c, int case_id) {
  static const int kCases[4][2] = {{1, 1}, {4, 1}, {1, 4}, {2, 2}};
  if (case_id < 1 || case_id > 4) {
    throw ConfigError("case must be 1..4, got " + std::to_string(case_id));
  }
  c.case_id = case_id;
  c.n = 4;
  c.epochs = kCases[case_id - 1][0];
  c.batches = kCases[case_id - 1][1];
  c.batch_size = c.n / static_cast<std::size_t>(c.batches);
  c.target_epoch = std::min(c.target_epoch, c.epochs);
}

// ---- simulation -----------------------------------------------------------

Dataset make_dataset(const ExperimentConfig& c) {
  if (c.data_source == "directory") {
    return load_image_directory(c.data_dir, c.shape, c.n, c.classes, c.seed);
  }
  return make_synthetic_dataset(c.shape, c.n, c.classes, c.seed);
}

Simulation simulate(const ExperimentConfig& c) {
  c.validate();
  Simulation sim;
  sim.data = make_dataset(c);
  BuiltModel model = build_model(c.arch, c.shape, c.classes, c.seed);
  TrainingConfig t = c.training();
  ModelParams theta = model.params;
  for (int r = 0; r < c.warmup_rounds; ++r) {
    TrainingConfig w = t;
    w.round = static_cast<std::uint64_t>(r);
    ClientResult res = client_update(model.arch, theta, sim.data, w);
    const ClientModel one{std::move(res.theta_next), sim.data.size()};
    theta = server_aggregate(std::span<const ClientModel>(&one, 1));
  }
  ClientResult res = client_update(model.arch, theta, sim.data, t);
  sim.record.arch = model.arch;
  sim.record.theta_start = std::move(theta);
  sim.record.theta_end = std::move(res.theta_next);
  sim.record.config = t;
  sim.record.n = sim.data.size();
  sim.trace = std::move(res.trace);
  return sim;
}

std::vector<int> attack_labels(const Simulation& sim, int target_epoch) {
  const Scenario s = scenario_of(sim.record.config);
  const int e = s == Scenario::kS4 ? target_epoch : 1;
  if (e < 1 || static_cast<std::size_t>(e) > sim.trace.size()) {
    throw std::out_of_range("no shuffle recorded for epoch " + std::to_string(e));
  }
  return sim.data.gather_labels(sim.trace[static_cast<std::size_t>(e - 1)]);
}

AttackConfig attack_config(const ExperimentConfig& c) {
  AttackConfig a;
  a.iterations = c.attack_iterations;
  a.lr = c.attack_lr;
  a.loss = c.loss;
  a.target_epoch = c.target_epoch;
  a.init_seed = derive_seed(c.seed, "dummy-init");
  a.optimize_labels = c.optimize_labels;
  return a;
}

AwaBoConfig bo_config(const ExperimentConfig& c) {
  AwaBoConfig b;
  b.budget = c.bo_budget;
  b.initial = c.bo_initial;
  b.bounds = c.bounds;
  b.seed = c.bo_seed.value_or(c.seed);
  b.log_objective = c.log_objective;
  b.parallel_initial = c.parallel_initial;
  return b;
}

MatchResult evaluate_reconstruction(const Dataset& truth, const Tensor& x_hat) {
  return match_batches(split_batch(truth.images), split_batch(x_hat));
}

// ---- persistence ----------------------------------------------------------

void save_simulation(const fs::path& dir, const Simulation& sim) {
  save_round(dir, sim.record);
  ordered_json j;
  j["shape"] = sim.data.images.shape();
  j["classes"] = sim.data.classes;
  j["labels"] = sim.data.labels;
  j["images"] = sim.data.images.storage();
  j["shuffle"] = sim.trace;
  std::ofstream out(dir / "dataset.json");
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "dataset.json").string());
}

Simulation load_simulation(const fs::path& dir) {
  Simulation sim;
  sim.record = load_round(dir);
  std::ifstream in(dir / "dataset.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "dataset.json").string());
  const nlohmann::json j = nlohmann::json::parse(in);
  sim.data.images = Tensor(j.at("shape").get<Shape>(),
                           j.at("images").get<std::vector<double>>());
  sim.data.labels = j.at("labels").get<std::vector<int>>();
  sim.data.classes = j.at("classes").get<std::size_t>();
  sim.trace = j.at("shuffle").get<ShuffleTrace>();
  return sim;
}

namespace {

ordered_json number_or_inf(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

ordered_json metrics_json(const ImageMetrics& m) {
  ordered_json j;
  j["mse"] = number_or_inf(m.mse);
  j["psnr"] = number_or_inf(m.psnr);
  j["ssim"] = number_or_inf(m.ssim);
  return j;
}

ordered_json q_json(const WeightVectorQ& q) {
  ordered_json j;
  j["q_cv"] = q.q_cv;
  j["q_bn"] = q.q_bn;
  j["q_fc"] = q.q_fc;
  j["q_en"] = q.q_en;
  j["p_mean"] = q.p_mean;
  j["p_var"] = q.p_var;
  return j;
}

Simulation obtain_simulation(const ExperimentConfig& c, std::ostream& log) {
  const fs::path dir = c.round_path();
  if (fs::exists(dir / "round.json")) {
    Simulation sim = load_simulation(dir);
    if (sim.record.arch.name != c.arch) {
      throw ConfigError("round record architecture '" + sim.record.arch.name +
                        "' does not match config '" + c.arch + "'");
    }
    return sim;
  }
  log << "no round record at " << dir.string() << ", simulating\n";
  Simulation sim = simulate(c);
  fs::create_directories(dir);
  save_simulation(dir, sim);
  return sim;
}

void write_outputs(const fs::path& out, const std::string& method,
                   const ExperimentConfig& c, const Simulation& sim,
                   const AttackResult& r, const WeightVectorQ& q,
                   std::ostream& log) {
  fs::create_directories(out / "images");
  const MatchResult m = evaluate_reconstruction(sim.data, r.x_hat);
  const std::vector<Tensor> recon = split_batch(r.x_hat);
  for (std::size_t i = 0; i < recon.size(); ++i) {
    write_pnm(out / "images" / ("recon_" + std::to_string(i) + ".ppm"),
              clamp_unit(recon[i]));
  }
  // Matched order so the two mosaics line up column by column.
  Tensor matched(r.x_hat.shape());
  const std::size_t per = recon.empty() ? 0 : recon[0].numel();
  for (std::size_t i = 0; i < recon.size(); ++i) {
    std::copy(recon[m.permutation[i]].data().begin(),
              recon[m.permutation[i]].data().end(),
              matched.data().begin() + i * per);
  }
  write_pnm(out / "images" / "recon_mosaic.ppm", clamp_unit(mosaic(matched)));
  write_pnm(out / "images" / "truth_mosaic.ppm", mosaic(sim.data.images));
  if (!r.trace.empty()) write_trace_csv(out / "trace.csv", r.trace);

  ordered_json j;
  j["method"] = method;
  j["case"] = c.case_id;
  j["scenario"] = scenario_name(scenario_of(sim.record.config));
  j["seed"] = c.seed;
  j["arch"] = sim.record.arch.name;
  j["q"] = q_json(q);
  j["f_value"] = number_or_inf(r.f_value);
  j["diverged"] = r.diverged;
  j["permutation"] = m.permutation;
  ordered_json per_image = ordered_json::array();
  for (const auto& pm : m.per_image) per_image.push_back(metrics_json(pm));
  j["per_image"] = per_image;
  j["mean"] = metrics_json(m.mean);
  std::ofstream f(out / "metrics.json");
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("cannot write " + (out / "metrics.json").string());
  log << method << ": f = " << r.f_value << ", matched mean MSE " << m.mean.mse
      << ", PSNR " << m.mean.psnr << " dB, SSIM " << m.mean.ssim
      << (r.diverged ? " (diverged)" : "") << '\n';
}

}  // namespace

void cmd_simulate(const ExperimentConfig& c, std::ostream& log) {
  const Simulation sim = simulate(c);
  const fs::path dir = c.round_path();
  fs::create_directories(dir);
  save_simulation(dir, sim);
  log << "simulated " << scenario_name(scenario_of(sim.record.config))
      << " round (N=" << c.n << ", E=" << c.epochs << ", B=" << c.batches
      << ") into " << dir.string() << '\n';
}

void cmd_attack(const ExperimentConfig& c, std::ostream& log,
                bool use_truth_init) {
  c.validate();
  const Simulation sim = obtain_simulation(c, log);
  const AttackConfig atk = attack_config(c);
  const AttackTarget target = make_attack_target(sim.record, atk.target_epoch);
  const std::vector<int> labels = attack_labels(sim, atk.target_epoch);
  const WeightVectorQ q = c.q.value_or(WeightVectorQ{});
  Tensor init;
  if (use_truth_init) {
    const Scenario s = scenario_of(sim.record.config);
    const int e = s == Scenario::kS4 ? atk.target_epoch : 1;
    init = sim.data.gather(sim.trace[static_cast<std::size_t>(e - 1)]);
  }
  const AttackResult r = rec_attack(sim.record.arch, q, target, labels, atk,
                                    use_truth_init ? &init : nullptr);
  write_outputs(c.out_dir,
                c.loss == LossKind::kWeighted ? "weighted" : "unweighted", c,
                sim, r, q, log);
}

void cmd_tune(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  const Simulation sim = obtain_simulation(c, log);
  const AttackConfig atk = attack_config(c);
  const std::vector<int> labels = attack_labels(sim, atk.target_epoch);
  fs::create_directories(c.out_dir);
  AwaResult r;
  try {
    r = awa_optimize(sim.record, atk, bo_config(c), labels);
  } catch (const AttackFailed& e) {
    write_trials_csv(c.out_dir / "trials.csv", e.trials());
    throw;
  }
  write_trials_csv(c.out_dir / "trials.csv", r.trials);
  write_trial_timing_csv(c.out_dir / "trials_timing.csv", r.trials);
  ordered_json q = q_json(r.q_star);
  std::ofstream qf(c.out_dir / "q_star.json");
  qf << q.dump(2) << '\n';
  write_outputs(c.out_dir, "awa", c, sim, r.final, r.q_star, log);
}

void cmd_report(const std::vector<fs::path>& runs, const fs::path& csv_path,
                std::ostream& log) {
  if (runs.empty()) throw ConfigError("report needs at least one run directory");
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write " + csv_path.string());
  out << "run,case,scenario,method,seed,mse,psnr,ssim,status\n";
  auto field = [](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    std::ostringstream s;
    s.precision(17);
    s << v.get<double>();
    return s.str();
  };
  for (const fs::path& run : runs) {
    const fs::path mpath = run / "metrics.json";
    std::ifstream in(mpath);
    if (!in) {
      log << "warning: " << mpath.string() << " missing, run skipped\n";
      out << run.string() << ",,,,,,,,missing metrics.json\n";
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      const auto& mean = j.at("mean");
      std::ostringstream row;
      row << run.string() << ',' << j.at("case").get<int>() << ','
          << j.at("scenario").get<std::string>() << ','
          << j.at("method").get<std::string>() << ','
          << j.at("seed").get<std::uint64_t>() << ',' << field(mean.at("mse"))
          << ',' << field(mean.at("psnr")) << ',' << field(mean.at("ssim"))
          << ",ok\n";
      out << row.str();
    } catch (const nlohmann::json::exception& e) {
      log << "warning: " << mpath.string() << " unreadable: " << e.what() << '\n';
      out << run.string() << ",,,,,,,,unreadable metrics.json\n";
    }
  }
}

}  // namespace awa
