// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "cgnerf/tensor.hpp"

namespace cgnerf::testing {

/// Leaf tensor with N(0, scale^2) entries that requires a gradient.
inline Tensor random_leaf(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = n(rng);
  Tensor t(std::move(shape), std::move(v));
  t.set_requires_grad(true);
  return t;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cgnerf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace cgnerf::testing
