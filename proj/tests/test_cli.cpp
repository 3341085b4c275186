// Copyright 2026  The adpit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int status = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("adpit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliResult run(const std::string& args) const {
    const std::string out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd = std::string(ADPIT_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    return r;
  }

  static std::string slurp(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, PermsListsThreeTracksTwoTargets) {
  const CliResult r = run("perms --n 3 --m 2");
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "K=12, distinct=6");
  int rows = 0;
  std::istringstream lines(r.out);
  for (std::string line; std::getline(lines, line);) rows += line.find(": ") != std::string::npos;
  EXPECT_EQ(rows, 6);
  const CliResult raw = run("perms --n 3 --m 2 --raw");
  EXPECT_NE(raw.out.find("raw 11:"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("").status, 1);
  EXPECT_EQ(run("no-such-command").status, 1);
  EXPECT_EQ(run("perms --bogus-flag").status, 1);
  EXPECT_EQ(run("eval --ref x.csv").status, 1);  // missing --pred
  EXPECT_EQ(run("perms --n 9").status, 2);
  EXPECT_EQ(run("perms --n 2 --m 3").status, 2);
  EXPECT_EQ(run("eval --ref " + path("missing.csv") + " --pred " + path("missing.csv")).status, 2);
  std::ofstream(path("bad.csv")) << "0,0,0,0\n";
  EXPECT_EQ(run("eval --ref " + path("bad.csv") + " --pred " + path("bad.csv")).status, 2);
  EXPECT_NE(slurp(path("stderr.txt")).find("bad.csv:1"), std::string::npos);
  EXPECT_EQ(run("--help").status, 0);
}

TEST_F(Cli, PipelineOnGeneratedScene) {
  ASSERT_EQ(run("gen-synth --out-dir " + path("data") + " --scenes 2 --seed 3 --classes 5").status, 0);
  const std::string csv = path("data/scene_0000.csv");
  ASSERT_TRUE(fs::exists(csv));
  ASSERT_TRUE(fs::exists(path("data/scene_0001.feat")));

  ASSERT_EQ(run("encode --ann " + csv + " --classes 5 --frames 200 --out " + path("ref.grid")).status, 0);
  const CliResult loss = run("loss-eval --pred " + path("ref.grid") + " --ref " + csv + " --variant class");
  ASSERT_EQ(loss.status, 0);
  EXPECT_NE(loss.out.find("loss=0.000000000000"), std::string::npos);

  ASSERT_EQ(run("infer --grid " + path("ref.grid") + " --out " + path("pred.csv")).status, 0);
  const CliResult ev = run("eval --ref " + csv + " --pred " + csv);
  ASSERT_EQ(ev.status, 0);
  EXPECT_NE(ev.out.find("er20=0.000000\nf20=1.000000\nle_cd=0.000000\nlr_cd=1.000000\ne_seld=0.000000\n"),
            std::string::npos);

  ASSERT_EQ(run("encode --ann " + csv + " --classes 5 --frames 200 --format single --out " + path("s.grid")).status,
            0);
  EXPECT_EQ(run("encode --ann " + csv + " --classes 2 --out " + path("x.grid")).status, 2);
}

TEST_F(Cli, TrainAndInferFromCheckpoint) {
  ASSERT_EQ(run("gen-synth --out-dir " + path("data") + " --scenes 2 --classes 4 --frames 60").status, 0);
  ASSERT_EQ(run("train --data-dir " + path("data") + " --epochs 2 --hidden 16 --classes 4 --out " + path("m.ckpt") +
                " --log " + path("log.txt"))
                .status,
            0);
  EXPECT_NE(slurp(path("log.txt")).find("epoch=2 loss="), std::string::npos);
  ASSERT_EQ(run("infer --model " + path("m.ckpt") + " --features " + path("data/scene_0000.feat") + " --out " +
                path("p.csv"))
                .status,
            0);
  EXPECT_TRUE(fs::exists(path("p.csv")));
  EXPECT_EQ(run("infer --model " + path("m.ckpt") + " --out " + path("p.csv")).status, 2);
  EXPECT_EQ(run("train --pit hungarian --out " + path("m2.ckpt")).status, 2);
}
