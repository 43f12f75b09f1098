// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "cgnerf/metrics.hpp"
#include "cgnerf/synth.hpp"
#include "test_util.hpp"

namespace cgnerf {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Scenes, SeededAndWithinBounds) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SyntheticScene s = sample_scene(seed);
    const SyntheticScene again = sample_scene(seed);
    ASSERT_GE(s.primitives.size(), 1u);
    ASSERT_LE(s.primitives.size(), 3u);
    ASSERT_EQ(s.primitives.size(), again.primitives.size());
    std::set<std::size_t> colors;
    for (std::size_t i = 0; i < s.primitives.size(); ++i) {
      const Ellipsoid& e = s.primitives[i];
      EXPECT_EQ(e.center, again.primitives[i].center);
      EXPECT_LE(std::hypot(e.center[0], e.center[1], e.center[2]), 0.25 + 1e-12);
      for (double r : e.radii) {
        EXPECT_GE(r, 0.12);
        EXPECT_LE(r, 0.28);
      }
      for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(e.albedo[k], palette_albedos()[e.color_index][k], 0.05 + 1e-12);
      }
      colors.insert(e.color_index);
    }
    EXPECT_EQ(colors.size(), s.primitives.size());
  }
}

TEST(OracleRender, CenteredSphereShadedAnalytically) {
  SyntheticScene scene;
  Ellipsoid e;
  e.radii = {0.2, 0.2, 0.2};
  e.albedo = {0.5, 0.4, 0.3};
  scene.primitives.push_back(e);
  scene.background = {1.0, 1.0, 1.0};
  scene.light = {0.0, 0.0, 1.0};
  // Camera on +z looking at the origin: the center ray hits the sphere head-on,
  // normal parallel to the light, so shade = albedo * (1 + ambient).
  const Image img = oracle_render(scene, make_pose(0.0, kPi / 2), 7, 7);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(img.at(3, 3, c), e.albedo[static_cast<std::size_t>(c)] * (1.0 + kAmbient), 1e-9);
  // Corner rays pass ~0.29 from the origin at closest approach: background.
  for (int c = 0; c < 3; ++c) EXPECT_EQ(img.at(0, 0, c), 1.0);
}

TEST(OracleRender, PixelsInUnitRange) {
  const Image img = oracle_render(sample_scene(3), make_pose(0.3, 1.4), 32, 32);
  for (double v : img.pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Describe, TemplateWords) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::istringstream words(describe_scene(sample_scene(seed)));
    std::string color, shape, noun;
    words >> color >> shape >> noun;
    EXPECT_NE(std::find(palette_names().begin(), palette_names().end(), color), palette_names().end());
    EXPECT_TRUE(shape == "round" || shape == "tall" || shape == "wide") << shape;
    EXPECT_EQ(noun, "object");
  }
}

DatasetOptions small_dataset() {
  DatasetOptions o;
  o.scenes = 3;
  o.views_per_scene = 2;
  o.height = o.width = 32;
  return o;
}

TEST(Dataset, SizesPosesAndConditions) {
  std::mt19937_64 rng(1);
  const DatasetOptions opts = small_dataset();
  const auto records = make_dataset(opts, rng);
  ASSERT_EQ(records.size(), 6u);
  for (const auto& r : records) {
    EXPECT_GE(r.pose.rotation, opts.prior.rotation_min);
    EXPECT_LE(r.pose.rotation, opts.prior.rotation_max);
    EXPECT_GE(r.pose.elevation, opts.prior.elevation_min);
    EXPECT_LE(r.pose.elevation, opts.prior.elevation_max);
    EXPECT_EQ(r.image.height, 32);
    EXPECT_EQ(r.low_res.height, 2);
    EXPECT_EQ(r.canonical, oracle_render(sample_scene(r.scene_seed), canonical_pose(), 32, 32));
    EXPECT_EQ(r.text, describe_scene(sample_scene(r.scene_seed)));
  }
  std::mt19937_64 rng2(1);
  const auto again = make_dataset(opts, rng2);
  for (std::size_t i = 0; i < records.size(); ++i) EXPECT_EQ(records[i].image, again[i].image);
}

TEST(Dataset, SaveLoadRoundTrip) {
  std::mt19937_64 rng(2);
  const auto records = make_dataset(small_dataset(), rng);
  const auto dir = testing::scratch_dir("dataset_roundtrip");
  save_dataset(dir, records);
  const auto loaded = load_dataset(dir);
  ASSERT_EQ(loaded.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(loaded[i].scene_id, records[i].scene_id);
    EXPECT_EQ(loaded[i].scene_seed, records[i].scene_seed);
    EXPECT_EQ(loaded[i].pose.rotation, records[i].pose.rotation);
    EXPECT_EQ(loaded[i].pose.elevation, records[i].pose.elevation);
    EXPECT_EQ(loaded[i].text, records[i].text);
    for (std::size_t k = 0; k < records[i].image.pixels.size(); ++k) {
      EXPECT_NEAR(loaded[i].image.pixels[k], records[i].image.pixels[k], 0.5 / 255.0 + 1e-12);
    }
  }
  // A second save of the loaded (already quantized) data is byte-identical.
  const auto dir2 = testing::scratch_dir("dataset_roundtrip2");
  save_dataset(dir2, loaded);
  EXPECT_EQ(read_file(dir / "metadata.txt"), read_file(dir2 / "metadata.txt"));
  EXPECT_EQ(read_file(dir / "record_0000.png"), read_file(dir2 / "record_0000.png"));
}

TEST(CircularStd, ClosedForms) {
  const std::vector<double> same{0.4, 0.4, 0.4};
  EXPECT_EQ(circular_std(same), 0.0);
  const double a = 0.3;
  const std::vector<double> pair{-a, a};
  EXPECT_NEAR(circular_std(pair), std::sqrt(-2.0 * std::log(std::cos(a))), 1e-12);
  // Straddling the +-pi seam gives the same spread as straddling zero.
  const std::vector<double> seam{kPi - a, -kPi + a};
  EXPECT_NEAR(circular_std(seam), circular_std(pair), 1e-12);
  EXPECT_THROW(circular_std(std::vector<double>{}), std::invalid_argument);
}

TEST(DiversityScore, PairwiseMeanAbsoluteDifference) {
  const std::vector<Tensor> same{Tensor::full({3, 2, 2}, 0.3), Tensor::full({3, 2, 2}, 0.3)};
  EXPECT_EQ(diversity_score(same), 0.0);
  const std::vector<Tensor> three{Tensor::full({3, 2, 2}, 0.0), Tensor::full({3, 2, 2}, 0.5),
                                  Tensor::full({3, 2, 2}, 1.0)};
  EXPECT_NEAR(diversity_score(three), (0.5 + 1.0 + 0.5) / 3.0, 1e-15);
  EXPECT_THROW(diversity_score(std::vector<Tensor>{Tensor::zeros({3, 2, 2})}), std::invalid_argument);
}

class FixedEstimator final : public PoseEstimator {
 public:
  explicit FixedEstimator(std::array<double, 2> value) : value_(value) {}
  std::array<double, 2> estimate(const Tensor&) const override { return value_; }

 private:
  std::array<double, 2> value_;
};

TEST(PoseError, WrappedAbsoluteError) {
  DatasetRecord r;
  r.image = Image(8, 8, 3);
  r.pose = make_pose(0.2, 1.5);
  const std::vector<DatasetRecord> records{r};
  EXPECT_NEAR(pose_error(FixedEstimator({0.2 + 2 * kPi, 1.5}), records)[0], 0.0, 1e-12);
  const auto err = pose_error(FixedEstimator({0.3, 1.3}), records);
  EXPECT_NEAR(err[0], 0.1, 1e-12);
  EXPECT_NEAR(err[1], 0.2, 1e-12);
}

GeneratorConfig tiny_generator() {
  GeneratorConfig c;
  c.latent = LatentDims{8, 4, 4};
  c.feature_dim = 8;
  c.hidden = 8;
  c.mapping_hidden = 8;
  c.feature_height = c.feature_width = 4;
  c.image_height = c.image_width = 16;
  c.samples = 4;
  return c;
}

TEST(GeneratorMetrics, ConstantEstimatorHasZeroSpreadAndSeededDiversity) {
  const Generator g(tiny_generator(), 3);
  const FixedEstimator est({0.1, 1.4});
  const std::vector<GlobalFeature> conds{GlobalFeature{std::vector<double>(8, 0.25)}};
  const GeneratorMetrics a = evaluate_generator(g, est, conds, 4, 9);
  const GeneratorMetrics b = evaluate_generator(g, est, conds, 4, 9);
  EXPECT_EQ(a.pose_std_rotation, 0.0);
  EXPECT_EQ(a.pose_std_elevation, 0.0);
  EXPECT_GT(a.diversity, 0.0);
  EXPECT_EQ(a.diversity, b.diversity);
}

TEST(PoseOracle, LearnsSyntheticPoses) {
  DatasetOptions opts;
  opts.scenes = 8;
  opts.views_per_scene = 8;
  opts.height = opts.width = 32;
  std::mt19937_64 rng(4);
  const auto records = make_dataset(opts, rng);
  PoseOracleOptions o;
  o.base_channels = 8;
  o.max_channels = 16;
  o.hidden = 32;
  PoseOracleReport report;
  const PoseOracle oracle = train_pose_oracle(records, o, &report);
  EXPECT_LT(report.final_loss, o.max_final_loss);
  EXPECT_LT(report.epoch_losses.back(), report.epoch_losses.front());
  const auto err = pose_error(oracle, records);
  // Well under the rotation prior half-width (pi/4).
  EXPECT_LT(err[0], 0.3);
}

TEST(PoseOracle, ImpossibleTargetReported) {
  DatasetOptions opts;
  opts.scenes = 2;
  opts.views_per_scene = 2;
  opts.height = opts.width = 16;
  std::mt19937_64 rng(5);
  const auto records = make_dataset(opts, rng);
  PoseOracleOptions o;
  o.epochs = 1;
  o.base_channels = 4;
  o.max_channels = 4;
  o.hidden = 4;
  o.max_final_loss = 0.0;
  EXPECT_THROW(train_pose_oracle(records, o), PoseOracleError);
}

}  // namespace
}  // namespace cgnerf
