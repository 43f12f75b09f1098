// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "cgnerf/config.hpp"
#include "cgnerf/image.hpp"
#include "test_util.hpp"

#ifdef CGNERF_CLI_PATH

namespace cgnerf {
namespace {

namespace fs = std::filesystem;

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CGNERF_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// One tiny trained checkpoint shared by every test in this file.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(testing::scratch_dir("cli"));
    TrainConfig c;
    c.generator.latent = LatentDims{8, 4, 4};
    c.generator.feature_dim = 8;
    c.generator.hidden = 8;
    c.generator.shape_layers = 2;
    c.generator.mapping_hidden = 8;
    c.generator.mapping_depth = 1;
    c.generator.feature_height = c.generator.feature_width = 8;
    c.generator.image_height = c.generator.image_width = 16;
    c.generator.samples = 4;
    c.disc_base_channels = 4;
    c.disc_max_channels = 8;
    c.disc_head_hidden = 8;
    c.scenes = 2;
    c.views_per_scene = 2;
    c.batch_size = 2;
    c.steps = 2;
    c.log_every = 1;
    c.metric_samples = 2;
    write_file_atomic(*dir_ / "tiny.cfg", format_config(c));
    train_status_ = run("train --config " + (*dir_ / "tiny.cfg").string() + " --out " +
                            (*dir_ / "run").string(),
                        *dir_ / "train.log");
  }
  static void TearDownTestSuite() { delete dir_; }

  static fs::path checkpoint() { return *dir_ / "run" / "checkpoint.bin"; }

  static fs::path* dir_;
  static int train_status_;
};

fs::path* CliTest::dir_ = nullptr;
int CliTest::train_status_ = -1;

TEST_F(CliTest, TrainWritesCheckpointAndLog) {
  ASSERT_EQ(train_status_, 0) << read_file(*dir_ / "train.log");
  EXPECT_TRUE(fs::exists(checkpoint()));
  const std::string log = read_file(*dir_ / "run" / "metrics.csv");
  EXPECT_EQ(log.rfind("step,loss_d", 0), 0u);
  EXPECT_NE(log.find("\n2,"), std::string::npos);
}

TEST_F(CliTest, RenderFiveViewStripFramesDiffer) {
  const fs::path out = *dir_ / "render5";
  ASSERT_EQ(run("render --checkpoint " + checkpoint().string() + " --views 5 --out " + out.string(),
                *dir_ / "render5.log"),
            0)
      << read_file(*dir_ / "render5.log");
  const Image strip = read_png(out / "strip.png");
  ASSERT_EQ(strip.height, 16);
  ASSERT_EQ(strip.width, 5 * 16);
  for (std::int64_t f = 1; f < 5; ++f) {
    double diff = 0.0;
    for (std::int64_t y = 0; y < 16; ++y) {
      for (std::int64_t x = 0; x < 16; ++x) {
        for (int c = 0; c < 3; ++c) diff += std::abs(strip.at(y, f * 16 + x, c) - strip.at(y, (f - 1) * 16 + x, c));
      }
    }
    EXPECT_GT(diff, 0.0) << "frame " << f;
  }
  EXPECT_FALSE(fs::exists(out / "average.png"));
}

TEST_F(CliTest, ZeroNoiseRenderIsReproducible) {
  const std::string base = "render --checkpoint " + checkpoint().string() + " --zero-noise --views 3 --out ";
  ASSERT_EQ(run(base + (*dir_ / "z1").string(), *dir_ / "z1.log"), 0) << read_file(*dir_ / "z1.log");
  ASSERT_EQ(run(base + (*dir_ / "z2").string(), *dir_ / "z2.log"), 0);
  EXPECT_EQ(read_file(*dir_ / "z1" / "strip.png"), read_file(*dir_ / "z2" / "strip.png"));
  EXPECT_TRUE(fs::exists(*dir_ / "z1" / "average.png"));
}

TEST_F(CliTest, TextConditionRenders) {
  EXPECT_EQ(run("render --checkpoint " + checkpoint().string() +
                    " --condition text --text \"red round object\" --views 2 --out " + (*dir_ / "text").string(),
                *dir_ / "text.log"),
            0)
      << read_file(*dir_ / "text.log");
}

TEST_F(CliTest, EvalPrintsTable) {
  ASSERT_EQ(run("eval --checkpoint " + checkpoint().string() + " --checkpoint " + checkpoint().string(),
                *dir_ / "eval.log"),
            0)
      << read_file(*dir_ / "eval.log");
  const std::string out = read_file(*dir_ / "eval.log");
  EXPECT_NE(out.find("pose_std_r"), std::string::npos);
  EXPECT_NE(out.find("diversity"), std::string::npos);
}

TEST_F(CliTest, BadInvocationsFail) {
  const fs::path log = *dir_ / "bad.log";
  EXPECT_NE(run("train --bogus-flag", log), 0);
  EXPECT_NE(run("render --checkpoint " + (*dir_ / "missing.bin").string(), log), 0);
  EXPECT_NE(run("train --config " + (*dir_ / "missing.cfg").string(), log), 0);
  write_file_atomic(*dir_ / "broken.cfg", "steps = lots\n");
  EXPECT_NE(run("train --config " + (*dir_ / "broken.cfg").string() + " --out " + (*dir_ / "b").string(), log), 0);
  EXPECT_NE(read_file(log).find("steps"), std::string::npos);
  EXPECT_NE(run("render --checkpoint " + checkpoint().string() + " --condition depth", log), 0);
  EXPECT_NE(run("", log), 0);
}

}  // namespace
}  // namespace cgnerf

#endif  // CGNERF_CLI_PATH
