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

// awa: simulate FedAvg rounds, attack them, tune Q and tabulate results.
//
//   awa simulate --config case.ini --out runs/c1
//   awa attack   --config case.ini --out runs/c1-dlg --case 1
//   awa tune     --config case.ini --out runs/c1-awa --case 1
//   awa report   --out table.csv runs/c1-dlg runs/c1-awa
//
// Exit status: 0 success, 1 configuration error, 2 runtime failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "awa/experiment.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> case_id;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "INI experiment file")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "master seed (overrides the file)");
  cmd->add_option("--case", f.case_id, "FedAvg case preset")
      ->check(CLI::Range(1, 4));
}

awa::ExperimentConfig resolve(const CommonFlags& f) {
  awa::ExperimentConfig c =
      f.config.empty() ? awa::ExperimentConfig{} : awa::load_config(f.config);
  if (f.case_id) awa::apply_case(c, *f.case_id);
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.out_dir = f.out;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate-and-weighted reconstruction attack lab for FedAvg"};
  app.require_subcommand(1);

  CommonFlags sim_f, atk_f, tune_f;
  auto* sim = app.add_subcommand("simulate", "run one FedAvg round and save it");
  add_common(sim, sim_f);

  auto* atk = app.add_subcommand("attack", "one reconstruction at a fixed Q");
  add_common(atk, atk_f);
  std::string q_text, loss, round_dir;
  bool truth_init = false;
  atk->add_option("--q", q_text, "q_cv,q_bn,q_fc,q_en,p_mean,p_var");
  atk->add_option("--loss", loss, "weighted or unweighted")
      ->check(CLI::IsMember({"weighted", "unweighted"}));
  atk->add_option("--round", round_dir, "round record directory")
      ->check(CLI::ExistingDirectory);
  atk->add_flag("--init-truth", truth_init, "start the dummy at the ground truth");

  auto* tune = app.add_subcommand("tune", "tune Q by Bayesian optimization");
  add_common(tune, tune_f);
  std::string tune_round;
  tune->add_option("--round", tune_round, "round record directory")
      ->check(CLI::ExistingDirectory);

  auto* rep = app.add_subcommand("report", "tabulate metrics of finished runs");
  std::string rep_out = "report.csv";
  std::vector<std::string> runs;
  rep->add_option("--out", rep_out, "CSV table to write");
  rep->add_option("runs", runs, "run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) {
      awa::cmd_simulate(resolve(sim_f), std::cout);
    } else if (*atk) {
      awa::ExperimentConfig c = resolve(atk_f);
      if (!q_text.empty()) {
        c.q = awa::WeightVectorQ::from_array(awa::parse_q_list(q_text));
      }
      if (loss == "weighted") c.loss = awa::LossKind::kWeighted;
      if (loss == "unweighted") c.loss = awa::LossKind::kUnweighted;
      if (!round_dir.empty()) c.round_dir = round_dir;
      c.validate();
      awa::cmd_attack(c, std::cout, truth_init);
    } else if (*tune) {
      awa::ExperimentConfig c = resolve(tune_f);
      if (!tune_round.empty()) c.round_dir = tune_round;
      c.validate();
      awa::cmd_tune(c, std::cout);
    } else if (*rep) {
      std::vector<std::filesystem::path> dirs(runs.begin(), runs.end());
      awa::cmd_report(dirs, rep_out, std::cerr);
    }
  } catch (const awa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
