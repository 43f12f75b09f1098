// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "cgnerf/checkpoint.hpp"
#include "cgnerf/config.hpp"
#include "cgnerf/optim.hpp"
#include "cgnerf/trainer.hpp"
#include "test_util.hpp"

namespace cgnerf {
namespace {

namespace fs = std::filesystem;

TrainConfig tiny_train_config() {
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
  c.steps = 3;
  c.log_every = 1;
  c.metric_samples = 2;
  return c;
}

std::vector<std::vector<double>> snapshot(const ParameterSet& set) {
  std::vector<std::vector<double>> out;
  for (const auto& [name, t] : set.entries()) out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

TEST(Config, FormatParseRoundTrip) {
  TrainConfig c = tiny_train_config();
  c.loss.lambda_div = 0.1 + 0.2;  // not exactly representable in short decimal
  c.condition = ConditionKind::kSketch;
  c.precision = Precision::kExact64;
  c.enable_pose_penalty = false;
  const std::string text = format_config(c);
  const TrainConfig back = parse_config(text);
  EXPECT_EQ(format_config(back), text);
  EXPECT_EQ(back.loss.lambda_div, c.loss.lambda_div);
  EXPECT_EQ(back.condition, ConditionKind::kSketch);
  EXPECT_FALSE(back.enable_pose_penalty);
}

TEST(Config, CommentsBlankLinesAndErrors) {
  const TrainConfig c = parse_config("# comment\n\n  steps = 7 \nseed=9\n");
  EXPECT_EQ(c.steps, 7);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_THROW(parse_config("stepz = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("steps = three\n"), ConfigError);
  EXPECT_THROW(parse_config("steps 3\n"), ConfigError);
  EXPECT_THROW(parse_config("enable_div = maybe\n"), ConfigError);
  EXPECT_THROW(load_config(testing::scratch_dir("noconfig") / "missing.cfg"), ConfigError);
}

TEST(Config, EveryKeyIsSettable) {
  const auto keys = config_keys();
  const std::set<std::string> unique(keys.begin(), keys.end());
  EXPECT_EQ(unique.size(), keys.size());
  const std::string text = format_config(TrainConfig{});
  for (const auto& k : keys) EXPECT_NE(text.find(k + " = "), std::string::npos) << k;
}

TEST(Config, ValidationRejectsBadValues) {
  TrainConfig c = tiny_train_config();
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_train_config();
  c.generator.image_height = c.generator.image_width = 8;
  c.generator.feature_height = c.generator.feature_width = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_train_config();
  c.enable_div = false;
  EXPECT_EQ(c.effective_loss().lambda_div, 0.0);
  EXPECT_EQ(c.effective_loss().lambda_pose, c.loss.lambda_pose);
}

TEST(Adam, MatchesHandWrittenUpdates) {
  AdamOptions o;
  o.learning_rate = 0.1;
  o.beta1 = 0.5;
  o.beta2 = 0.9;
  Tensor p = Tensor::from({2}, {1.0, -2.0});
  p.set_requires_grad(true);
  Adam adam({p}, o);
  const std::vector<std::vector<double>> grads{{0.5, -1.0}, {0.2, 3.0}};
  double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {1.0, -2.0};
  for (std::size_t t = 0; t < grads.size(); ++t) {
    adam.step(std::vector<Tensor>{Tensor({2}, grads[t])});
    for (int i = 0; i < 2; ++i) {
      const double g = grads[t][static_cast<std::size_t>(i)];
      m[i] = 0.5 * m[i] + 0.5 * g;
      v[i] = 0.9 * v[i] + 0.1 * g * g;
      const double mh = m[i] / (1 - std::pow(0.5, t + 1.0));
      const double vh = v[i] / (1 - std::pow(0.9, t + 1.0));
      x[i] -= 0.1 * mh / (std::sqrt(vh) + o.epsilon);
      EXPECT_NEAR(p[i], x[i], 1e-15);
    }
  }
  EXPECT_EQ(adam.moments().step, 2);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  Tensor p = Tensor::from({3}, {0.0, 0.0, 0.0});
  p.set_requires_grad(true);
  Adam adam({p}, AdamOptions{});
  adam.step(std::vector<Tensor>{Tensor::from({3}, {4.0, -0.01, 100.0})});
  EXPECT_NEAR(p[0], -2e-4, 1e-11);
  EXPECT_NEAR(p[1], 2e-4, 1e-9);
  EXPECT_NEAR(p[2], -2e-4, 1e-11);
}

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.config = "steps = 3\n";
  c.step = 17;
  c.rng_state = "1 2 3";
  c.add("a", Tensor::from({2, 2}, {1.0, -0.0, 1e-300, 3.5}));
  c.add("b", Tensor::scalar(42.0));
  return c;
}

TEST(Checkpoint, SerializeRoundTripIsByteIdentical) {
  const std::string bytes = serialize_checkpoint(sample_checkpoint());
  const Checkpoint back = deserialize_checkpoint(bytes);
  EXPECT_EQ(back.step, 17);
  EXPECT_EQ(back.rng_state, "1 2 3");
  EXPECT_EQ(back.find("a").shape, (Shape{2, 2}));
  EXPECT_EQ(serialize_checkpoint(back), bytes);
  const fs::path path = testing::scratch_dir("ckpt") / "c.bin";
  save_checkpoint(path, back);
  EXPECT_EQ(read_file(path), bytes);
  EXPECT_EQ(serialize_checkpoint(load_checkpoint(path)), bytes);
}

TEST(Checkpoint, DistinctFailureModes) {
  const std::string bytes = serialize_checkpoint(sample_checkpoint());
  std::string corrupt = bytes;
  corrupt[corrupt.size() / 2] ^= 0x10;
  EXPECT_THROW(deserialize_checkpoint(corrupt), CheckpointChecksumError);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 9)), CheckpointTruncatedError);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, 6)), CheckpointTruncatedError);
  std::string versioned = bytes;
  versioned[4] = static_cast<char>(kCheckpointVersion + 1);
  EXPECT_THROW(deserialize_checkpoint(versioned), CheckpointVersionError);
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(magic), CheckpointError);
  EXPECT_THROW(load_checkpoint(testing::scratch_dir("ckpt_missing") / "nope.bin"), CheckpointError);
}

TEST(Checkpoint, ShapeConflictRaisesMismatch) {
  const Checkpoint c = sample_checkpoint();
  Tensor wrong = Tensor::zeros({4});
  EXPECT_THROW(c.restore("a", wrong), CheckpointMismatchError);
  Tensor right = Tensor::zeros({2, 2});
  c.restore("a", right);
  EXPECT_EQ(right[3], 3.5);
  EXPECT_THROW(c.find("missing"), CheckpointError);
}

TEST(DeriveSeed, StreamsDiffer) {
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(Trainer, StepsOnlyTouchTheirOwnNetwork) {
  Trainer t(tiny_train_config());
  const auto g0 = snapshot(t.generator().parameters());
  const auto d0 = snapshot(t.discriminator().parameters());
  const auto ds = t.dataset();
  t.discriminator_step();
  EXPECT_EQ(snapshot(t.generator().parameters()), g0);
  const auto d1 = snapshot(t.discriminator().parameters());
  EXPECT_NE(d1, d0);
  t.generator_step();
  EXPECT_EQ(snapshot(t.discriminator().parameters()), d1);
  EXPECT_NE(snapshot(t.generator().parameters()), g0);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(t.dataset()[i].image, ds[i].image);
}

TEST(Trainer, IdenticalNoiseZeroesPairTerms) {
  Trainer t(tiny_train_config());
  const GeneratorStepStats s = t.generator_step(GeneratorStepOptions{true});
  EXPECT_EQ(s.diversity, 0.0);
  EXPECT_EQ(s.pose_penalty, 0.0);
  EXPECT_TRUE(std::isfinite(s.loss));
  const GeneratorStepStats r = t.generator_step();
  EXPECT_GT(r.diversity, 0.0);
}

TEST(Trainer, DiscriminatorStatsAreSane) {
  Trainer t(tiny_train_config());
  const DiscriminatorStepStats s = t.discriminator_step();
  EXPECT_TRUE(std::isfinite(s.loss));
  EXPECT_GE(s.penalty, 0.0);
  EXPECT_GE(s.pose_reconstruction, 0.0);
  EXPECT_LE(s.pose_reconstruction, 2.0);
  EXPECT_GE(s.accuracy, 0.0);
  EXPECT_LE(s.accuracy, 1.0);
  EXPECT_NEAR(s.loss, s.adversarial + s.penalty + s.pose_reconstruction, 1e-12);
}

TEST(Trainer, DisabledSwitchesEqualZeroWeights) {
  TrainConfig off = tiny_train_config();
  off.enable_div = false;
  off.enable_pose_penalty = false;
  TrainConfig zero = tiny_train_config();
  zero.loss.lambda_div = 0.0;
  zero.loss.lambda_pose = 0.0;
  Trainer a(off), b(zero);
  for (int i = 0; i < 2; ++i) {
    const MetricsRow ra = a.train_step(false), rb = b.train_step(false);
    EXPECT_EQ(ra.loss_d, rb.loss_d);
    EXPECT_EQ(ra.loss_g, rb.loss_g);
  }
  EXPECT_EQ(snapshot(a.generator().parameters()), snapshot(b.generator().parameters()));
}

TEST(Trainer, RestoreRejectsConflictingConfig) {
  Trainer small(tiny_train_config());
  TrainConfig wider = tiny_train_config();
  wider.generator.hidden = 12;
  Trainer other(wider);
  EXPECT_THROW(other.restore(small.checkpoint()), CheckpointMismatchError);
}

TEST(TrainLoop, ZeroStepsWritesInitialCheckpointOnly) {
  TrainConfig c = tiny_train_config();
  c.steps = 0;
  const fs::path dir = testing::scratch_dir("loop_zero");
  const TrainOutputs out = train_loop(c, dir);
  EXPECT_TRUE(out.log.empty());
  EXPECT_EQ(load_checkpoint(out.checkpoint_path).step, 0);
  EXPECT_EQ(read_file(dir / "metrics.csv"), metrics_header() + "\n");
  const Trainer fresh(c);
  EXPECT_EQ(serialize_checkpoint(load_checkpoint(out.checkpoint_path)),
            serialize_checkpoint(fresh.checkpoint()));
}

TEST(TrainLoop, SameSeedGivesIdenticalLogs) {
  const TrainConfig c = tiny_train_config();
  const fs::path a = testing::scratch_dir("loop_a"), b = testing::scratch_dir("loop_b");
  train_loop(c, a);
  train_loop(c, b);
  EXPECT_EQ(read_file(a / "metrics.csv"), read_file(b / "metrics.csv"));
  EXPECT_EQ(read_file(a / "checkpoint.bin"), read_file(b / "checkpoint.bin"));
  TrainConfig other = c;
  other.seed = 2;
  const fs::path d = testing::scratch_dir("loop_d");
  train_loop(other, d);
  EXPECT_NE(read_file(a / "metrics.csv"), read_file(d / "metrics.csv"));
}

TEST(TrainLoop, ResumeContinuesBitExactly) {
  TrainConfig full = tiny_train_config();
  full.steps = 4;
  const fs::path straight = testing::scratch_dir("loop_straight");
  train_loop(full, straight);

  TrainConfig half = full;
  half.steps = 2;
  const fs::path resumed = testing::scratch_dir("loop_resumed");
  train_loop(half, resumed);
  const Checkpoint mid = load_checkpoint(resumed / "checkpoint.bin");
  EXPECT_EQ(mid.step, 2);
  train_loop(full, resumed, &mid);
  EXPECT_EQ(read_file(resumed / "metrics.csv"), read_file(straight / "metrics.csv"));
  const Checkpoint x = load_checkpoint(straight / "checkpoint.bin");
  const Checkpoint y = load_checkpoint(resumed / "checkpoint.bin");
  EXPECT_EQ(x.step, y.step);
  EXPECT_EQ(x.rng_state, y.rng_state);
  ASSERT_EQ(x.tensors.size(), y.tensors.size());
  for (std::size_t i = 0; i < x.tensors.size(); ++i) EXPECT_EQ(x.tensors[i].values, y.tensors[i].values);
}

TEST(TrainLoop, LogRowsAreFinite) {
  TrainConfig c = tiny_train_config();
  c.steps = 2;
  const TrainOutputs out = train_loop(c, testing::scratch_dir("loop_finite"));
  ASSERT_EQ(out.log.size(), 2u);
  for (const auto& r : out.log) {
    for (double v : {r.loss_d, r.loss_g, r.l_div, r.l_pose, r.pose_std_r, r.pose_std_e, r.diversity}) {
      EXPECT_TRUE(std::isfinite(v));
    }
  }
}

}  // namespace
}  // namespace cgnerf
