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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "awa/dataset.hpp"
#include "awa/experiment.hpp"
#include "awa/image_io.hpp"
#include "awa/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace awa {
namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("awa_test_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// ---- image io -------------------------------------------------------------

TEST(ImageIo, RoundTripsEightBitValues) {
  TempDir dir("pnm");
  Rng rng(1);
  for (std::size_t c : {1u, 3u}) {
    Tensor img(Shape{c, 3, 5});
    for (double& v : img.data()) v = static_cast<double>(rng.below(256)) / 255.0;
    const fs::path p = dir.path() / (c == 3 ? "a.ppm" : "a.pgm");
    write_pnm(p, img);
    EXPECT_EQ(slurp(p).substr(0, 2), c == 3 ? "P6" : "P5");
    const Tensor back = read_pnm(p);
    ASSERT_EQ(back.shape(), img.shape());
    for (std::size_t i = 0; i < img.numel(); ++i) EXPECT_NEAR(back[i], img[i], 1e-15);
  }
}

TEST(ImageIo, ClampsAndRounds) {
  TempDir dir("pnm_clamp");
  const Tensor img(Shape{1, 1, 3}, std::vector<double>{-0.5, 0.5, 2.0});
  write_pnm(dir.path() / "c.pgm", img);
  const std::string bytes = slurp(dir.path() / "c.pgm");
  const std::string px = bytes.substr(bytes.size() - 3);
  EXPECT_EQ(static_cast<unsigned char>(px[0]), 0);
  EXPECT_EQ(static_cast<unsigned char>(px[1]), 128);
  EXPECT_EQ(static_cast<unsigned char>(px[2]), 255);
}

TEST(ImageIo, ReadsCommentsAndSmallMaxval) {
  TempDir dir("pnm_comment");
  spit(dir.path() / "x.pgm", std::string("P5\n# hi\n2 1\n# there\n15\n") + '\x00' + '\x0f');
  const Tensor t = read_pnm(dir.path() / "x.pgm");
  EXPECT_EQ(t, Tensor(Shape{1, 1, 2}, std::vector<double>{0.0, 1.0}));
}

TEST(ImageIo, RejectsMalformedFiles) {
  TempDir dir("pnm_bad");
  spit(dir.path() / "a.ppm", "P3\n1 1\n255\n0 0 0\n");
  EXPECT_THROW(read_pnm(dir.path() / "a.ppm"), ImageIoError);
  spit(dir.path() / "b.ppm", "P6\n2 2\n255\nab");
  EXPECT_THROW(read_pnm(dir.path() / "b.ppm"), ImageIoError);
  spit(dir.path() / "c.ppm", "P6\n1 1\n65535\nabcdef");
  EXPECT_THROW(read_pnm(dir.path() / "c.ppm"), ImageIoError);
  EXPECT_THROW(read_pnm(dir.path() / "missing.ppm"), ImageIoError);
  EXPECT_THROW(write_pnm(dir.path() / "d.ppm", Tensor(Shape{2, 2, 2})), std::exception);
}

TEST(ImageIo, MosaicLayout) {
  Tensor batch(Shape{2, 1, 2, 2}, std::vector<double>{0, 0, 0, 0, 0.5, 0.5, 0.5, 0.5});
  const Tensor m = mosaic(batch);
  ASSERT_EQ(m.shape(), (Shape{1, 2, 5}));
  EXPECT_EQ(m[2], 1.0);
  EXPECT_EQ(m[3], 0.5);
}

// ---- datasets -------------------------------------------------------------

TEST(Dataset, SyntheticIsDeterministicAndNormalized) {
  const Dataset a = make_synthetic_dataset({3, 8, 8}, 5, 10, 4);
  const Dataset b = make_synthetic_dataset({3, 8, 8}, 5, 10, 4);
  const Dataset c = make_synthetic_dataset({3, 8, 8}, 5, 10, 5);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.images, c.images);
  EXPECT_EQ(a.images.shape(), (Shape{5, 3, 8, 8}));
  for (double v : a.images.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (int l : a.labels) {
    EXPECT_GE(l, 0);
    EXPECT_LT(l, 10);
  }
  // Every channel plane spans [0, 1].
  for (std::size_t p = 0; p < 15; ++p) {
    const auto first = a.images.data().begin() + p * 64;
    EXPECT_EQ(*std::min_element(first, first + 64), 0.0);
    EXPECT_EQ(*std::max_element(first, first + 64), 1.0);
  }
}

TEST(Dataset, LoadsDirectoryInNameOrder) {
  TempDir dir("imgdir");
  Rng rng(2);
  std::vector<Tensor> imgs;
  for (int i = 0; i < 3; ++i) {
    Tensor t(Shape{3, 2, 2});
    for (double& v : t.data()) v = static_cast<double>(rng.below(256)) / 255.0;
    imgs.push_back(t);
  }
  write_pnm(dir.path() / "b.ppm", imgs[1]);
  write_pnm(dir.path() / "a.ppm", imgs[0]);
  write_pnm(dir.path() / "c.ppm", imgs[2]);
  spit(dir.path() / "notes.txt", "ignored");
  const Dataset d = load_image_directory(dir.path(), {3, 2, 2}, 2, 10, 1);
  EXPECT_EQ(d.image(0), imgs[0]);
  EXPECT_EQ(d.image(1), imgs[1]);
  EXPECT_THROW(load_image_directory(dir.path(), {3, 2, 2}, 4, 10, 1), ImageIoError);
  EXPECT_THROW(load_image_directory(dir.path(), {1, 2, 2}, 2, 10, 1), ImageIoError);
}

// ---- configuration --------------------------------------------------------

TEST(Config, ParsesEverySection) {
  const ExperimentConfig c = parse_config(R"(
[model]
arch = mlp_small
channels = 1
height = 4
width = 4
classes = 5
[training]
n = 6
epochs = 2
batches = 3
batch_size = 2
lr = 0.01
[attack]
iterations = 10
lr = 0.05
loss = unweighted
target_epoch = 2
q = 1,2,3,4,0.1,0.2
[bo]
budget = 8
initial = 3
seed = 11
log_objective = false
[data]
source = synthetic
[run]
seed = 9
out = somewhere
)");
  EXPECT_EQ(c.arch, "mlp_small");
  EXPECT_EQ(c.shape, (ImageShape{1, 4, 4}));
  EXPECT_EQ(c.classes, 5u);
  EXPECT_EQ(c.n, 6u);
  EXPECT_EQ(c.batches, 3);
  EXPECT_EQ(c.lr, 0.01);
  EXPECT_EQ(c.loss, LossKind::kUnweighted);
  EXPECT_EQ(c.q, (WeightVectorQ{1, 2, 3, 4, 0.1, 0.2}));
  EXPECT_EQ(c.bo_seed, 11u);
  EXPECT_FALSE(c.log_objective);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.out_dir, fs::path("somewhere"));
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(scenario_of(c.training()), Scenario::kS4);
}

TEST(Config, ErrorsNameTheKey) {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config(text).validate();
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message("[training]\nlr = fast\n").find("training.lr"), std::string::npos);
  EXPECT_NE(message("[training]\nbogus = 1\n").find("training.bogus"), std::string::npos);
  EXPECT_NE(message("[training]\nn = 5\n").find("training"), std::string::npos);
  EXPECT_NE(message("[attack]\nloss = fancy\n").find("attack.loss"), std::string::npos);
  EXPECT_NE(message("[attack]\ntarget_epoch = 2\n").find("target_epoch"), std::string::npos);
  EXPECT_NE(message("[model]\narch = resnet\n").find("model"), std::string::npos);
  EXPECT_NE(message("[attack]\nq = 1,2\n").find("Q"), std::string::npos);
  EXPECT_NE(message("[attack]\nq = 1,1,1,1,0.9,0\n").find("attack.q"), std::string::npos);
  EXPECT_NE(message("[bo]\nbudget = 5\ninitial = 5\n").find("bo"), std::string::npos);
  EXPECT_NE(message("[data]\nsource = directory\n").find("data.dir"), std::string::npos);
  EXPECT_NE(message("[training\n").find("syntax"), std::string::npos);
  EXPECT_EQ(message(""), "");
  EXPECT_THROW(load_config("/nonexistent/awa.ini"), ConfigError);
}

TEST(Config, CasePresets) {
  const std::pair<int, int> eb[] = {{1, 1}, {4, 1}, {1, 4}, {2, 2}};
  for (int k = 1; k <= 4; ++k) {
    ExperimentConfig c;
    apply_case(c, k);
    EXPECT_EQ(c.n, 4u);
    EXPECT_EQ(c.epochs, eb[k - 1].first);
    EXPECT_EQ(c.batches, eb[k - 1].second);
    EXPECT_EQ(static_cast<int>(scenario_of(c.training())), k);
    EXPECT_NO_THROW(c.validate());
  }
  ExperimentConfig c;
  EXPECT_THROW(apply_case(c, 5), ConfigError);
}

TEST(Config, QList) {
  EXPECT_EQ(parse_q_list("1,2,3,4,0.5,0"), (std::vector<double>{1, 2, 3, 4, 0.5, 0}));
  EXPECT_THROW(parse_q_list("1,2,3"), ConfigError);
  EXPECT_THROW(parse_q_list("1,2,x,4,5,6"), ConfigError);
}

// ---- simulation and commands ---------------------------------------------

ExperimentConfig small_config(const fs::path& out, int case_id) {
  ExperimentConfig c;
  apply_case(c, case_id);
  c.arch = "cnn_small";
  c.shape = {3, 4, 4};
  c.attack_iterations = 5;
  c.bo_budget = 4;
  c.bo_initial = 2;
  c.seed = 3;
  c.out_dir = out;
  return c;
}

TEST(Experiment, SimulationRoundTripsThroughDisk) {
  TempDir dir("sim");
  ExperimentConfig c = small_config(dir.path(), 4);
  c.warmup_rounds = 2;
  const Simulation s = simulate(c);
  EXPECT_EQ(s.record.config.round, 2u);
  save_simulation(dir.path() / "round", s);
  const Simulation back = load_simulation(dir.path() / "round");
  EXPECT_EQ(back.record.theta_start, s.record.theta_start);
  EXPECT_EQ(back.record.theta_end, s.record.theta_end);
  EXPECT_EQ(back.data.images, s.data.images);
  EXPECT_EQ(back.data.labels, s.data.labels);
  EXPECT_EQ(back.trace, s.trace);
  const auto labels = attack_labels(s, 2);
  EXPECT_EQ(labels, s.data.gather_labels(s.trace[1]));
}

TEST(Experiment, AttackAtTruthScoresPerfectly) {
  TempDir dir("atk_truth");
  const ExperimentConfig c = small_config(dir.path(), 1);
  std::ostringstream log;
  cmd_attack(c, log, true);
  const auto j = nlohmann::json::parse(slurp(dir.path() / "metrics.json"));
  EXPECT_NEAR(j["mean"]["ssim"].get<double>(), 1.0, 1e-6);
  for (const char* f : {"trace.csv", "images/recon_mosaic.ppm", "images/truth_mosaic.ppm",
                        "images/recon_0.ppm", "round/round.json"})
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
}

TEST(Experiment, TuneIsByteReproducible) {
  TempDir a("tune_a"), b("tune_b");
  std::ostringstream log;
  cmd_tune(small_config(a.path(), 2), log);
  cmd_tune(small_config(b.path(), 2), log);
  EXPECT_EQ(slurp(a.path() / "trials.csv"), slurp(b.path() / "trials.csv"));
  EXPECT_EQ(slurp(a.path() / "q_star.json"), slurp(b.path() / "q_star.json"));
  EXPECT_TRUE(fs::exists(a.path() / "trials_timing.csv"));
}

TEST(Experiment, ReportTabulatesRunsAndFlagsMissing) {
  TempDir dir("report");
  std::ostringstream log;
  cmd_attack(small_config(dir.path() / "run1", 1), log);
  fs::create_directories(dir.path() / "empty");
  cmd_report({dir.path() / "run1", dir.path() / "empty"}, dir.path() / "t.csv", log);
  std::istringstream csv(slurp(dir.path() / "t.csv"));
  std::string header, row1, row2;
  std::getline(csv, header);
  std::getline(csv, row1);
  std::getline(csv, row2);
  EXPECT_EQ(header, "run,case,scenario,method,seed,mse,psnr,ssim,status");
  EXPECT_NE(row1.find(",ok"), std::string::npos) << row1;
  EXPECT_NE(row2.find("missing metrics.json"), std::string::npos);
}

// ---- the awa binary -------------------------------------------------------

int run(const std::string& args) {
  const std::string cmd = std::string(AWA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  const fs::path ini = dir.path() / "c.ini";
  spit(ini, "[model]\nheight = 4\nwidth = 4\n[attack]\niterations = 3\n");
  const std::string out = (dir.path() / "run").string();
  EXPECT_EQ(run("simulate --config " + ini.string() + " --out " + out + " --case 3"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "run" / "round" / "round.json"));
  EXPECT_EQ(run("attack --config " + ini.string() + " --out " + out +
                " --case 3 --loss unweighted --round " + out + "/round"),
            0);
  EXPECT_TRUE(fs::exists(dir.path() / "run" / "metrics.json"));
  EXPECT_EQ(run("report --out " + (dir.path() / "r.csv").string() + " " + out), 0);

  spit(dir.path() / "bad.ini", "[training]\nlr = -1\n");
  EXPECT_EQ(run("simulate --config " + (dir.path() / "bad.ini").string()), 1);
  EXPECT_EQ(run("attack --q 1,2 --out " + out), 1);
  EXPECT_EQ(run("simulate --case 9"), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run(""), 1);
  // Corrupt round file: a runtime failure.
  spit(dir.path() / "run" / "round" / "theta_start.bin", "garbage");
  EXPECT_EQ(run("attack --config " + ini.string() + " --out " + out +
                " --case 3 --round " + out + "/round"),
            2);
}

}  // namespace
}  // namespace awa
