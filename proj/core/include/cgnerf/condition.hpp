// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Condition derivation (grayscale, Sobel sketch, 1/16 low-res), condition
// encoding into a unit-norm global feature, noise codes and the matching
// vector e = [c | z_s | z_a] handed to the discriminator.

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgnerf/image.hpp"

namespace cgnerf {

enum class ConditionKind { kColor, kGray, kSketch, kLowRes, kText };

std::string_view condition_name(ConditionKind kind);
/// Accepts color | gray | sketch | lowres | text.
ConditionKind parse_condition_kind(std::string_view name);

inline constexpr std::int64_t kLowResFactor = 16;
inline constexpr double kDefaultSketchThreshold = 0.25;

struct ConditionInput {
  ConditionKind kind = ConditionKind::kColor;
  Image image;                      // unused for text
  std::vector<std::string> tokens;  // text only

  static ConditionInput from_image(ConditionKind kind, Image image);
  static ConditionInput from_text(std::string_view text);
};

/// Luminance 0.299 R + 0.587 G + 0.114 B, single channel.
Image to_grayscale(const Image& color);
/// Thresholded, max-normalized Sobel magnitude of the luminance; 1 on edges,
/// 0 elsewhere. Borders replicate the nearest pixel.
Image sobel_sketch(const Image& color, double threshold = kDefaultSketchThreshold);
/// Bilinear reduction by 16 per axis (half-pixel centers).
Image downsample_low_res(const Image& color);
/// Bilinear resampling with half-pixel centers and clamped borders.
Image resize_bilinear(const Image& image, std::int64_t height, std::int64_t width);

/// Whitespace split, ASCII lowercase.
std::vector<std::string> tokenize(std::string_view text);

struct GlobalFeature {
  std::vector<double> values;
  std::size_t size() const { return values.size(); }
};

class EncoderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::int64_t dim() const = 0;
  virtual GlobalFeature encode(const ConditionInput& condition) const = 0;
};

/// Deterministic stand-in for a multimodal encoder. Images become an 8x8 RGB
/// bilinear thumbnail plus per-channel mean and standard deviation; text
/// becomes a hashed bag of tokens. Both are projected by fixed seeded Gaussian
/// matrices into the same space and L2-normalized.
class ToyEncoder final : public Encoder {
 public:
  ToyEncoder(std::int64_t dim, std::uint64_t seed);
  std::int64_t dim() const override { return dim_; }
  GlobalFeature encode(const ConditionInput& condition) const override;

  static constexpr std::int64_t kThumb = 8;
  static constexpr std::int64_t kImageFeatures = kThumb * kThumb * 3 + 6;
  static constexpr std::int64_t kTextBuckets = 256;

 private:
  std::int64_t dim_;
  std::vector<double> image_proj_;  // dim x kImageFeatures
  std::vector<double> text_proj_;   // dim x kTextBuckets
};

struct NoiseCodes {
  std::vector<double> shape;
  std::vector<double> appearance;

  static NoiseCodes zeros(std::int64_t shape_dim, std::int64_t appearance_dim);
};

NoiseCodes sample_noise(std::int64_t shape_dim, std::int64_t appearance_dim, std::mt19937_64& rng);

struct LatentDims {
  std::int64_t condition = 32;
  std::int64_t shape = 32;
  std::int64_t appearance = 32;
  std::int64_t matching() const { return condition + shape + appearance; }
};

/// e = [c | z_s | z_a].
struct MatchingVector {
  std::vector<double> values;
  LatentDims dims;

  std::span<const double> condition() const;
  std::span<const double> shape_code() const;
  std::span<const double> appearance_code() const;
};

MatchingVector build_matching_vector(const GlobalFeature& c, const NoiseCodes& z,
                                     const LatentDims& dims);

/// Row vector [1 x n] tensor.
Tensor row_tensor(std::span<const double> values);

}  // namespace cgnerf
