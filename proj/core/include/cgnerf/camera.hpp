// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Camera poses on the unit view sphere, pinhole ray generation over the
// feature grid, and stratified depth sampling.
//
// Conventions: world y is up. A pose (rotation, elevation) places the camera
// at (sin e sin r, cos e, sin e cos r), so elevation is the polar angle from
// +y and rotation 0 on the equator looks down -z from +z. The camera right
// axis is (cos r, 0, -sin r), which depends on rotation alone; the frame is
// therefore well defined at the poles and needs no fallback up-vector.

#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace cgnerf {

using Vec3 = std::array<double, 3>;

struct CameraPose {
  double radius = 1.0;
  double rotation = 0.0;               // kappa_r, radians in [-pi, pi]
  double elevation = std::numbers::pi / 2;  // kappa_e, radians in [0, pi]
};

/// Validated pose; rotation is canonicalized into [-pi, pi].
CameraPose make_pose(double rotation, double elevation);

/// Wraps an angle into [-pi, pi].
double canonical_angle(double angle);

struct PosePrior {
  double rotation_min = -std::numbers::pi / 4;
  double rotation_max = std::numbers::pi / 4;
  double elevation_min = std::numbers::pi / 2 - 0.15;
  double elevation_max = std::numbers::pi / 2 + 0.15;

  void validate() const;
};

/// Uniform draw per angle; radius is always 1.
CameraPose sample_pose(const PosePrior& prior, std::mt19937_64& rng);

struct CameraFrame {
  Vec3 position;
  Vec3 forward;
  Vec3 right;
  Vec3 up;
};

CameraFrame pose_to_camera(const CameraPose& pose);

struct RayBundle {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<Vec3> origins;
  std::vector<Vec3> directions;
  double near = 0.5;
  double far = 1.5;

  std::int64_t count() const { return height * width; }
};

/// One ray through each pixel center of a height x width grid, row-major from
/// the top-left pixel. `fov` is the full vertical field of view.
RayBundle generate_rays(const CameraPose& pose, double fov, std::int64_t height,
                        std::int64_t width, double near = 0.5, double far = 1.5);

/// Direction (azimuth, elevation): azimuth = atan2(x, z), elevation = asin(y).
std::array<double, 2> direction_angles(const Vec3& unit_dir);
Vec3 angles_direction(double azimuth, double elevation);

struct RaySamples {
  std::int64_t rays = 0;
  std::int64_t samples = 0;
  std::vector<double> depths;   // rays x samples
  std::vector<double> points;   // rays x samples x 3
  std::vector<double> deltas;   // rays x samples
  std::vector<double> angles;   // rays x 2
};

/// [near, far] split into `samples` equal bins with one uniform depth per bin.
/// delta_j = t_{j+1} - t_j, and the last delta is far - t_J.
RaySamples stratified_sample(const RayBundle& rays, std::int64_t samples, std::mt19937_64& rng);

}  // namespace cgnerf
