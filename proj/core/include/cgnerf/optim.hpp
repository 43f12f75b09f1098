// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cgnerf/tensor.hpp"

namespace cgnerf {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double epsilon = 1e-8;
  void validate() const;
};

struct AdamMoments {
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::int64_t step = 0;

  static AdamMoments zeros_like(std::span<const Tensor> params);
};

/// Bias-corrected Adam, in place:
///   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2,  t += 1
///   p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
void adam_step(std::span<const Tensor> params, std::span<const Tensor> grads, AdamMoments& moments,
               const AdamOptions& options);

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);
  void step(std::span<const Tensor> grads);
  const std::vector<Tensor>& params() const { return params_; }
  AdamMoments& moments() { return moments_; }
  const AdamMoments& moments() const { return moments_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  AdamMoments moments_;
};

}  // namespace cgnerf
