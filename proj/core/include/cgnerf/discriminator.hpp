// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Condition-matching discriminator with an auxiliary pose head.
//
// A stack of log2(H) - 2 stride-2 convolutions (4x4 kernels, padding 1,
// leaky ReLU) reduces an H x W image to 4 x 4 and is flattened. The match
// head sees [features | e]; the pose head sees the features alone and emits
// (2pi * sigmoid(u1) - pi, pi * sigmoid(u2)).

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cgnerf/nn.hpp"
#include "cgnerf/tensor.hpp"

namespace cgnerf {

struct DiscriminatorConfig {
  std::int64_t image_height = 64;
  std::int64_t image_width = 64;
  std::int64_t base_channels = 16;
  std::int64_t max_channels = 64;
  std::int64_t head_hidden = 64;
  std::int64_t matching_dim = 96;

  void validate() const;
  std::int64_t stages() const;
  std::int64_t feature_dim() const;
};

/// Raw head outputs [N x 2] -> (rotation in [-pi, pi], elevation in [0, pi]).
Tensor pose_from_raw(const Tensor& raw);

class Discriminator {
 public:
  Discriminator(DiscriminatorConfig config, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  /// [3 x H x W] -> [1 x F].
  Tensor features(const Tensor& image) const;
  /// Row-stacked features of several images, [N x F].
  Tensor features(std::span<const Tensor> images) const;
  /// features [N x F], e [N x E] -> logits [N x 1].
  Tensor match_logit(const Tensor& features, const Tensor& matching) const;
  /// features [N x F] -> raw pose outputs [N x 2].
  Tensor pose_raw(const Tensor& features) const;
  /// features [N x F] -> [N x 2] bounded angle predictions.
  Tensor estimate_pose(const Tensor& features) const { return pose_from_raw(pose_raw(features)); }

  struct Linear {
    Tensor weight;
    Tensor bias;
  };
  const std::vector<Linear>& match_head() const { return match_head_; }
  const std::vector<Linear>& pose_head() const { return pose_head_; }

 private:
  DiscriminatorConfig config_;
  ParameterSet params_;
  std::vector<Linear> convs_;
  std::vector<Linear> match_head_;
  std::vector<Linear> pose_head_;
};

}  // namespace cgnerf
