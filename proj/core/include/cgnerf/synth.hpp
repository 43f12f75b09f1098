// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Procedural scenes of shaded ellipsoids with known camera poses, used as
// the training set and as ground truth for the pose oracle.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cgnerf/camera.hpp"
#include "cgnerf/condition.hpp"
#include "cgnerf/image.hpp"

namespace cgnerf {

using Rgb = std::array<double, 3>;

struct Ellipsoid {
  Vec3 center{};
  Vec3 radii{1.0, 1.0, 1.0};
  Rgb albedo{};
  std::size_t color_index = 0;  // into palette_names()
};

struct SyntheticScene {
  std::vector<Ellipsoid> primitives;
  Rgb background{1.0, 1.0, 1.0};
  Vec3 light{0.0, 0.0, 1.0};  // unit, pointing towards the light
};

inline constexpr double kAmbient = 0.2;

/// The eight color names used by the text template and their base albedos.
const std::array<std::string, 8>& palette_names();
const std::array<Rgb, 8>& palette_albedos();

/// 1 to 3 ellipsoids with distinct palette colors, centers within 0.25 of the
/// origin and radii in [0.12, 0.28]; deterministic for a given seed.
SyntheticScene sample_scene(std::uint64_t seed);

/// Analytic ray casting: nearest ellipsoid hit, shaded
/// clamp(albedo * (max(0, n.l) + ambient)), background elsewhere.
Image oracle_render(const SyntheticScene& scene, const CameraPose& pose, std::int64_t height,
                    std::int64_t width, double fov = 0.6);

/// "<color> <shape> object" for the largest primitive; shape is round, tall or wide.
std::string describe_scene(const SyntheticScene& scene);

/// The pose every condition is derived from.
CameraPose canonical_pose();

struct DatasetRecord {
  std::int64_t scene_id = 0;
  std::uint64_t scene_seed = 0;
  CameraPose pose;
  Image image;
  Image canonical;  // color condition
  Image gray;
  Image sketch;
  Image low_res;
  std::string text;

  ConditionInput condition(ConditionKind kind) const;
};

struct DatasetOptions {
  std::int64_t scenes = 16;
  std::int64_t views_per_scene = 8;
  std::int64_t height = 64;
  std::int64_t width = 64;
  double fov = 0.6;
  double sketch_threshold = kDefaultSketchThreshold;
  PosePrior prior;
};

std::vector<DatasetRecord> make_dataset(const DatasetOptions& options, std::mt19937_64& rng);

/// Writes record_NNNN.png, scene_NNNN.png and metadata.txt (one key=value
/// line per record: record, scene, seed, rotation, elevation, text).
void save_dataset(const std::filesystem::path& dir, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& dir,
                                        double sketch_threshold = kDefaultSketchThreshold);

}  // namespace cgnerf
