// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Named trainable tensors and initializers shared by the networks.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cgnerf/tensor.hpp"

namespace cgnerf {

/// Ordered collection of named leaf tensors that require gradients. Order is
/// insertion order and is what checkpoints and optimizers iterate over.
class ParameterSet {
 public:
  /// Registers `value` (marked requires_grad) and returns the stored handle.
  Tensor add(std::string name, Tensor value);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  std::int64_t total_numel() const;

  /// Copies values from `other` by name; shapes and names must agree exactly.
  void copy_values_from(const ParameterSet& other);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng);
Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng);

/// First sine layer: U(-1/fan_in, 1/fan_in).
Tensor siren_first_init(std::int64_t out, std::int64_t in, std::mt19937_64& rng);
/// Later sine layers: U(-sqrt(6/fan_in)/30, sqrt(6/fan_in)/30).
Tensor siren_hidden_init(std::int64_t out, std::int64_t in, std::mt19937_64& rng);
/// He-uniform for ReLU-family layers, scaled by `gain`. `fan_in` includes
/// kernel area for convolutions.
Tensor he_uniform(Shape shape, std::int64_t fan_in, std::mt19937_64& rng, double gain = 1.0);

}  // namespace cgnerf
