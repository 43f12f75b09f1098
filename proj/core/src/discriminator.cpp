// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/discriminator.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cgnerf/ops.hpp"

namespace cgnerf {

void DiscriminatorConfig::validate() const {
  if (base_channels < 1 || max_channels < 1 || head_hidden < 1 || matching_dim < 1) {
    throw std::invalid_argument("discriminator widths must be positive");
  }
  (void)stages();
}

std::int64_t DiscriminatorConfig::stages() const {
  const auto h = image_height;
  if (h != image_width || h < 8 || (h & (h - 1)) != 0) {
    throw std::invalid_argument("discriminator needs a square power-of-two image of at least 8x8, got " +
                                std::to_string(image_height) + "x" + std::to_string(image_width));
  }
  std::int64_t n = 0;
  for (std::int64_t r = h; r > 4; r >>= 1) ++n;
  return n;
}

std::int64_t DiscriminatorConfig::feature_dim() const {
  std::int64_t ch = base_channels;
  for (std::int64_t s = 1; s < stages(); ++s) ch = std::min(ch * 2, max_channels);
  return ch * 16;
}

Tensor pose_from_raw(const Tensor& raw) {
  if (raw.ndim() != 2 || raw.dim(1) != 2) {
    throw ShapeError("pose head output must be [N x 2], got " + shape_string(raw.shape()));
  }
  // Keep the +-pi wrap opposite the frontal prior; a sigmoid cannot cross it.
  const Tensor ranges = Tensor::from({2}, {2.0 * std::numbers::pi, std::numbers::pi});
  const Tensor offsets = Tensor::from({2}, {-std::numbers::pi, 0.0});
  return add(mul(sigmoid(raw), ranges), offsets);
}

Discriminator::Discriminator(DiscriminatorConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  std::int64_t in = 3;
  std::int64_t ch = config_.base_channels;
  for (std::int64_t s = 0; s < config_.stages(); ++s) {
    Linear conv;
    conv.weight = params_.add("conv" + std::to_string(s) + ".weight",
                              he_uniform({ch, in, 4, 4}, in * 16, rng));
    conv.bias = params_.add("conv" + std::to_string(s) + ".bias", Tensor::zeros({ch}));
    convs_.push_back(conv);
    in = ch;
    ch = std::min(ch * 2, config_.max_channels);
  }
  const std::int64_t f = config_.feature_dim();
  auto add_linear = [&](const std::string& name, std::int64_t out, std::int64_t fan_in,
                        double gain) {
    Linear l;
    l.weight = params_.add(name + ".weight", he_uniform({out, fan_in}, fan_in, rng, gain));
    l.bias = params_.add(name + ".bias", Tensor::zeros({out}));
    return l;
  };
  const std::int64_t e = config_.matching_dim;
  match_head_.push_back(add_linear("match.0", config_.head_hidden, f + e, 1.0));
  match_head_.push_back(add_linear("match.1", 1, config_.head_hidden, 0.5));
  pose_head_.push_back(add_linear("pose.0", config_.head_hidden, f, 1.0));
  pose_head_.push_back(add_linear("pose.1", 2, config_.head_hidden, 0.5));
}

Tensor Discriminator::features(const Tensor& image) const {
  const Shape expected{3, config_.image_height, config_.image_width};
  if (image.shape() != expected) {
    throw ShapeError("discriminator input " + shape_string(image.shape()) + ", expected " +
                     shape_string(expected));
  }
  Tensor h = image;
  for (const auto& c : convs_) h = leaky_relu(conv2d(h, c.weight, c.bias, 2, 1));
  return reshape(h, {1, h.numel()});
}

Tensor Discriminator::features(std::span<const Tensor> images) const {
  std::vector<Tensor> rows;
  rows.reserve(images.size());
  for (const auto& img : images) rows.push_back(features(img));
  return rows.size() == 1 ? rows.front() : concat(rows, 0);
}

Tensor Discriminator::match_logit(const Tensor& features, const Tensor& matching) const {
  if (features.ndim() != 2 || matching.ndim() != 2 || features.dim(0) != matching.dim(0) ||
      matching.dim(1) != config_.matching_dim) {
    throw ShapeError("match_logit: features " + shape_string(features.shape()) +
                     " with matching vector " + shape_string(matching.shape()));
  }
  Tensor h = concat({features, matching}, 1);
  h = leaky_relu(linear(h, match_head_[0].weight, match_head_[0].bias));
  return linear(h, match_head_[1].weight, match_head_[1].bias);
}

Tensor Discriminator::pose_raw(const Tensor& features) const {
  Tensor h = leaky_relu(linear(features, pose_head_[0].weight, pose_head_[0].bias));
  return linear(h, pose_head_[1].weight, pose_head_[1].bias);
}

}  // namespace cgnerf
