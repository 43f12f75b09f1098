// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/camera.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cgnerf {
namespace {

constexpr double kPi = std::numbers::pi;

Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace

double canonical_angle(double angle) {
  if (angle >= -kPi && angle <= kPi) return angle;
  double r = std::remainder(angle, 2.0 * kPi);
  if (r < -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

CameraPose make_pose(double rotation, double elevation) {
  if (!std::isfinite(rotation) || !std::isfinite(elevation)) {
    throw std::invalid_argument("camera pose angles must be finite");
  }
  if (elevation < 0.0 || elevation > kPi) {
    throw std::invalid_argument("elevation " + std::to_string(elevation) + " outside [0, pi]");
  }
  return CameraPose{1.0, canonical_angle(rotation), elevation};
}

void PosePrior::validate() const {
  if (!(rotation_min <= rotation_max)) throw std::invalid_argument("empty rotation range");
  if (!(elevation_min <= elevation_max)) throw std::invalid_argument("empty elevation range");
  if (rotation_min < -kPi || rotation_max > kPi) {
    throw std::invalid_argument("rotation range must lie within [-pi, pi]");
  }
  if (elevation_min < 0.0 || elevation_max > kPi) {
    throw std::invalid_argument("elevation range must lie within [0, pi]");
  }
}

CameraPose sample_pose(const PosePrior& prior, std::mt19937_64& rng) {
  prior.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const double v = unit(rng);
  CameraPose pose;
  pose.rotation = prior.rotation_min + u * (prior.rotation_max - prior.rotation_min);
  pose.elevation = prior.elevation_min + v * (prior.elevation_max - prior.elevation_min);
  return pose;
}

CameraFrame pose_to_camera(const CameraPose& pose) {
  const double r = canonical_angle(pose.rotation);
  const double se = std::sin(pose.elevation), ce = std::cos(pose.elevation);
  const double sr = std::sin(r), cr = std::cos(r);
  CameraFrame f;
  f.position = {pose.radius * se * sr, pose.radius * ce, pose.radius * se * cr};
  f.forward = {-se * sr, -ce, -se * cr};
  f.right = {cr, 0.0, -sr};
  f.up = cross(f.right, f.forward);
  return f;
}

RayBundle generate_rays(const CameraPose& pose, double fov, std::int64_t height,
                        std::int64_t width, double near, double far) {
  if (!(fov > 0.0 && fov < kPi)) throw std::invalid_argument("fov must lie in (0, pi)");
  if (height < 1 || width < 1) throw std::invalid_argument("ray grid must be non-empty");
  if (!(near < far)) throw std::invalid_argument("near must be < far");
  const auto frame = pose_to_camera(pose);
  const double half = std::tan(0.5 * fov);
  const double aspect = static_cast<double>(width) / static_cast<double>(height);
  RayBundle b;
  b.height = height;
  b.width = width;
  b.near = near;
  b.far = far;
  b.origins.assign(static_cast<std::size_t>(height * width), frame.position);
  b.directions.reserve(static_cast<std::size_t>(height * width));
  for (std::int64_t i = 0; i < height; ++i) {
    const double sy = (1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(height)) * half;
    for (std::int64_t j = 0; j < width; ++j) {
      const double sx =
          (2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(width) - 1.0) * half * aspect;
      Vec3 d;
      for (int k = 0; k < 3; ++k) d[k] = frame.forward[k] + sx * frame.right[k] + sy * frame.up[k];
      b.directions.push_back(normalized(d));
    }
  }
  return b;
}

std::array<double, 2> direction_angles(const Vec3& d) {
  const double y = std::clamp(d[1], -1.0, 1.0);
  return {std::atan2(d[0], d[2]), std::asin(y)};
}

Vec3 angles_direction(double azimuth, double elevation) {
  const double ce = std::cos(elevation);
  return {ce * std::sin(azimuth), std::sin(elevation), ce * std::cos(azimuth)};
}

RaySamples stratified_sample(const RayBundle& rays, std::int64_t samples, std::mt19937_64& rng) {
  if (samples < 1) throw std::invalid_argument("stratified_sample needs at least one sample");
  RaySamples s;
  s.rays = rays.count();
  s.samples = samples;
  const auto n = static_cast<std::size_t>(s.rays * samples);
  s.depths.resize(n);
  s.deltas.resize(n);
  s.points.resize(n * 3);
  s.angles.resize(static_cast<std::size_t>(s.rays) * 2);
  const double bin = (rays.far - rays.near) / static_cast<double>(samples);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::int64_t p = 0; p < s.rays; ++p) {
    const auto pi = static_cast<std::size_t>(p);
    const auto base = pi * static_cast<std::size_t>(samples);
    for (std::int64_t j = 0; j < samples; ++j) {
      s.depths[base + static_cast<std::size_t>(j)] =
          rays.near + (static_cast<double>(j) + unit(rng)) * bin;
    }
    const Vec3& o = rays.origins[pi];
    const Vec3& d = rays.directions[pi];
    for (std::int64_t j = 0; j < samples; ++j) {
      const auto idx = base + static_cast<std::size_t>(j);
      const double t = s.depths[idx];
      s.deltas[idx] = (j + 1 < samples ? s.depths[idx + 1] : rays.far) - t;
      for (int k = 0; k < 3; ++k) s.points[idx * 3 + static_cast<std::size_t>(k)] = o[k] + t * d[k];
    }
    const auto a = direction_angles(d);
    s.angles[pi * 2] = a[0];
    s.angles[pi * 2 + 1] = a[1];
  }
  return s;
}

}  // namespace cgnerf
