// Copyright 2026 The jlsampler Authors.
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
#include <sstream>
#include <string>
#include <vector>

#include "jlsampler/cli.hpp"

namespace fs = std::filesystem;
namespace cli = jlsampler::cli;
namespace io = jlsampler::io;
using json = nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("jlsampler_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string file(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "jlsampler");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, GenDataIsDeterministic) {
  ASSERT_EQ(run({"gen-data", "--n", "6", "--d", "4", "--seed", "3", "--out", file("a.csv")}), 0);
  const std::string first = out_.str();
  ASSERT_EQ(run({"gen-data", "--n", "6", "--d", "4", "--seed", "3", "--out", file("b.csv")}), 0);
  EXPECT_EQ(first, out_.str());
  EXPECT_EQ(io::read_file(file("a.csv")), io::read_file(file("b.csv")));
  const auto data = io::read_dataset(file("a.csv"));
  EXPECT_EQ(data.n(), 6);
  EXPECT_EQ(data.d(), 4);
}

TEST_F(CliTest, ValidationErrorWritesNothing) {
  EXPECT_EQ(run({"gen-data", "--n", "0", "--d", "4", "--out", file("a.csv")}), cli::kValidation);
  EXPECT_TRUE(fs::is_empty(dir_));
  EXPECT_EQ(run({"gen-data", "--n", "x", "--d", "4", "--out", file("a.csv")}), cli::kValidation);
  EXPECT_EQ(run({"optimize", "--n", "5", "--d", "3", "--k", "2", "--rho", "-1", "--out-matrix",
                 file("m.csv"), "--out-trace", file("t.csv"), "--out-summary", file("s.json")}),
            cli::kValidation);
  EXPECT_EQ(run({"no-such-command"}), cli::kValidation);
  EXPECT_EQ(run({}), cli::kValidation);
  EXPECT_TRUE(fs::is_empty(dir_));
}

TEST_F(CliTest, MissingDatasetIsAnIoError) {
  EXPECT_EQ(run({"optimize", "--data", file("missing.csv"), "--k", "2", "--out-matrix", file("m.csv"),
                 "--out-trace", file("t.csv"), "--out-summary", file("s.json")}),
            cli::kIo);
  EXPECT_TRUE(fs::is_empty(dir_));
  EXPECT_EQ(run({"gen-data", "--n", "3", "--d", "3", "--out", file("no/dir/a.csv")}), cli::kIo);
}

TEST_F(CliTest, ConfigWithFlagOverride) {
  io::write_file_atomic(file("cfg.json"),
                        json{{"command", "gen-data"}, {"n", 9}, {"d", 3}, {"out", file("a.csv")}}.dump());
  ASSERT_EQ(run({"--config", file("cfg.json")}), 0);
  EXPECT_EQ(io::read_dataset(file("a.csv")).n(), 9);
  ASSERT_EQ(run({"--config", file("cfg.json"), "gen-data", "--n", "4"}), 0);
  EXPECT_EQ(io::read_dataset(file("a.csv")).n(), 4);
  EXPECT_EQ(run({"--config", file("cfg.json"), "baseline"}), cli::kValidation);

  io::write_file_atomic(file("bad.json"), json{{"command", "gen-data"}, {"bogus", 1}}.dump());
  EXPECT_EQ(run({"--config", file("bad.json")}), cli::kValidation);
  io::write_file_atomic(file("broken.json"), "{not json");
  EXPECT_EQ(run({"--config", file("broken.json")}), cli::kValidation);
}

TEST_F(CliTest, OptimizeWritesArtifacts) {
  ASSERT_EQ(run({"optimize", "--n", "8", "--d", "6", "--data-seed", "2", "--k", "3", "--eps", "0.9",
                 "--out-matrix", file("m.csv"), "--out-trace", file("t.csv"), "--out-summary",
                 file("s.json")}),
            0)
      << err_.str();
  const auto m = io::read_matrix(file("m.csv"));
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), 6);
  const json s = json::parse(io::read_file(file("s.json")));
  EXPECT_TRUE(s["converged"].get<bool>());
  EXPECT_TRUE(s["C"].is_null());
  EXPECT_EQ(s["eps"].get<double>(), 0.9);
  EXPECT_EQ(io::read_file(file("t.csv")).rfind("iter,step_type,", 0), 0u);
}

TEST_F(CliTest, IterationCapIsNumericalFailure) {
  EXPECT_EQ(run({"optimize", "--n", "12", "--d", "10", "--data-seed", "21", "--k", "5", "--eps", "0.7",
                 "--max-iters", "3", "--out-matrix", file("m.csv"), "--out-trace", file("t.csv"),
                 "--out-summary", file("s.json")}),
            cli::kNumerical);
}

TEST_F(CliTest, McWithZeroIterations) {
  ASSERT_EQ(run({"mc", "--n", "5", "--d", "4", "--k", "2", "--iters", "0", "--out-matrix", file("m.csv"),
                 "--out-trajectory", file("traj.csv")}),
            0)
      << err_.str();
  const std::string traj = io::read_file(file("traj.csv"));
  EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 2);
  EXPECT_FALSE(fs::exists(file("plot.svg")));
  EXPECT_EQ(std::distance(fs::directory_iterator(dir_), fs::directory_iterator()), 2);
}

TEST_F(CliTest, CounterexampleReport) {
  ASSERT_EQ(run({"counterexample", "--ks", "2", "--trials", "50", "--out", file("r.json")}), 0);
  const json r = json::parse(io::read_file(file("r.json")));
  ASSERT_EQ(r["reports"].size(), 1u);
  EXPECT_EQ(r["reports"][0]["n_points"].get<int>(), 12);
  EXPECT_NEAR(r["reports"][0]["distortion"].get<double>(), 1.25, 1e-12);
  EXPECT_EQ(r["convention"], "squared_ratio");
  EXPECT_EQ(run({"counterexample", "--ks", "1", "--out", file("r.json")}), cli::kValidation);
  EXPECT_EQ(run({"counterexample", "--convention", "other", "--out", file("r.json")}), cli::kValidation);
}

TEST_F(CliTest, GridSearch) {
  ASSERT_EQ(run({"grid-search", "--n", "8", "--d", "6", "--k", "3", "--eps-grid", "0.9", "--out",
                 file("g.json")}),
            0)
      << err_.str();
  const json g = json::parse(io::read_file(file("g.json")));
  EXPECT_EQ(g["cells"].size(), 1u);
  EXPECT_EQ(g["best_eps"].get<double>(), 0.9);
  EXPECT_EQ(run({"grid-search", "--n", "8", "--d", "6", "--k", "3", "--eps-grid", "", "--out",
                 file("h.json")}),
            cli::kValidation);
  EXPECT_FALSE(fs::exists(file("h.json")));
}

TEST_F(CliTest, BaselineSummary) {
  ASSERT_EQ(run({"baseline", "--n", "10", "--d", "5", "--k", "3", "--trials", "20", "--out",
                 file("b.json")}),
            0);
  const json b = json::parse(io::read_file(file("b.json")));
  EXPECT_LE(b["min_max_distortion"].get<double>(), b["avg_max_distortion"].get<double>());
}
