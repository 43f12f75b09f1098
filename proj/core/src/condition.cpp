// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/condition.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace cgnerf {
namespace {

std::vector<double> gaussian_matrix(std::int64_t rows, std::int64_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
  std::vector<double> m(static_cast<std::size_t>(rows * cols));
  for (auto& v : m) v = normal(rng);
  return m;
}

GlobalFeature project_normalized(const std::vector<double>& proj, std::int64_t rows,
                                 const std::vector<double>& x) {
  const auto cols = static_cast<std::int64_t>(x.size());
  GlobalFeature c;
  c.values.assign(static_cast<std::size_t>(rows), 0.0);
  for (std::int64_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::int64_t k = 0; k < cols; ++k) {
      acc += proj[static_cast<std::size_t>(r * cols + k)] * x[static_cast<std::size_t>(k)];
    }
    c.values[static_cast<std::size_t>(r)] = acc;
  }
  double norm = 0.0;
  for (double v : c.values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0 || !std::isfinite(norm)) {
    // Degenerate input: fall back to the first basis vector.
    std::fill(c.values.begin(), c.values.end(), 0.0);
    c.values[0] = 1.0;
    return c;
  }
  for (double& v : c.values) v /= norm;
  return c;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

Image as_rgb(const Image& img) {
  if (img.channels == 3) return img;
  if (img.channels != 1) throw EncoderError("image conditions need 1 or 3 channels");
  Image out(img.height, img.width, 3);
  for (std::int64_t y = 0; y < img.height; ++y) {
    for (std::int64_t x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, 0);
    }
  }
  return out;
}

void require_rgb(const Image& img, const char* op) {
  if (img.channels != 3 || img.height < 1 || img.width < 1) {
    throw std::invalid_argument(std::string(op) + " expects a non-empty 3-channel image");
  }
}

}  // namespace

std::string_view condition_name(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::kColor: return "color";
    case ConditionKind::kGray: return "gray";
    case ConditionKind::kSketch: return "sketch";
    case ConditionKind::kLowRes: return "lowres";
    case ConditionKind::kText: return "text";
  }
  return "unknown";
}

ConditionKind parse_condition_kind(std::string_view name) {
  for (auto k : {ConditionKind::kColor, ConditionKind::kGray, ConditionKind::kSketch,
                 ConditionKind::kLowRes, ConditionKind::kText}) {
    if (condition_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown condition kind '" + std::string(name) + "'");
}

ConditionInput ConditionInput::from_image(ConditionKind kind, Image image) {
  if (kind == ConditionKind::kText) throw std::invalid_argument("text condition needs tokens");
  ConditionInput c;
  c.kind = kind;
  c.image = std::move(image);
  return c;
}

ConditionInput ConditionInput::from_text(std::string_view text) {
  ConditionInput c;
  c.kind = ConditionKind::kText;
  c.tokens = tokenize(text);
  if (c.tokens.empty()) throw std::invalid_argument("text condition has no tokens");
  return c;
}

Image to_grayscale(const Image& color) {
  require_rgb(color, "to_grayscale");
  Image out(color.height, color.width, 1);
  for (std::int64_t y = 0; y < color.height; ++y) {
    for (std::int64_t x = 0; x < color.width; ++x) {
      out.at(y, x, 0) =
          0.299 * color.at(y, x, 0) + 0.587 * color.at(y, x, 1) + 0.114 * color.at(y, x, 2);
    }
  }
  return out;
}

Image sobel_sketch(const Image& color, double threshold) {
  if (threshold < 0.0 || threshold > 1.0) throw std::invalid_argument("threshold must lie in [0, 1]");
  const Image lum = to_grayscale(color);
  const std::int64_t h = lum.height, w = lum.width;
  auto px = [&](std::int64_t y, std::int64_t x) {
    return lum.at(std::clamp<std::int64_t>(y, 0, h - 1), std::clamp<std::int64_t>(x, 0, w - 1), 0);
  };
  Image mag(h, w, 1);
  double peak = 0.0;
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const double gx = (px(y - 1, x + 1) + 2.0 * px(y, x + 1) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2.0 * px(y, x - 1) + px(y + 1, x - 1));
      const double gy = (px(y + 1, x - 1) + 2.0 * px(y + 1, x) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2.0 * px(y - 1, x) + px(y - 1, x + 1));
      const double m = std::sqrt(gx * gx + gy * gy);
      mag.at(y, x, 0) = m;
      peak = std::max(peak, m);
    }
  }
  Image out(h, w, 1, 0.0);
  if (peak <= 0.0) return out;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double v = mag.pixels[i] / peak;
    out.pixels[i] = (v > 0.0 && v >= threshold) ? 1.0 : 0.0;
  }
  return out;
}

Image resize_bilinear(const Image& image, std::int64_t height, std::int64_t width) {
  if (height < 1 || width < 1) throw std::invalid_argument("resize target must be non-empty");
  Image out(height, width, image.channels);
  const double sy = static_cast<double>(image.height) / static_cast<double>(height);
  const double sx = static_cast<double>(image.width) / static_cast<double>(width);
  for (std::int64_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(image.height - 1));
    const auto y0 = static_cast<std::int64_t>(std::floor(fy));
    const std::int64_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::int64_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(image.width - 1));
      const auto x0 = static_cast<std::int64_t>(std::floor(fx));
      const std::int64_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::int64_t c = 0; c < image.channels; ++c) {
        const double top = (1.0 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c);
        const double bottom = (1.0 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c);
        out.at(y, x, c) = (1.0 - wy) * top + wy * bottom;
      }
    }
  }
  return out;
}

Image downsample_low_res(const Image& color) {
  require_rgb(color, "downsample_low_res");
  if (color.height % kLowResFactor != 0 || color.width % kLowResFactor != 0) {
    throw std::invalid_argument("low-res derivation needs extents divisible by 16, got " +
                                std::to_string(color.height) + "x" + std::to_string(color.width));
  }
  return resize_bilinear(color, color.height / kLowResFactor, color.width / kLowResFactor);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    tokens.push_back(tok);
  }
  return tokens;
}

ToyEncoder::ToyEncoder(std::int64_t dim, std::uint64_t seed)
    : dim_(dim),
      image_proj_(gaussian_matrix(dim, kImageFeatures, seed)),
      text_proj_(gaussian_matrix(dim, kTextBuckets, seed ^ 0x9e3779b97f4a7c15ull)) {
  if (dim < 1) throw std::invalid_argument("encoder dimension must be positive");
}

GlobalFeature ToyEncoder::encode(const ConditionInput& condition) const {
  if (condition.kind == ConditionKind::kText) {
    if (condition.tokens.empty()) throw EncoderError("empty text condition");
    std::vector<double> bag(static_cast<std::size_t>(kTextBuckets), 0.0);
    for (const auto& tok : condition.tokens) bag[fnv1a(tok) % kTextBuckets] += 1.0;
    return project_normalized(text_proj_, dim_, bag);
  }
  if (condition.image.height < 1 || condition.image.width < 1) {
    throw EncoderError("image condition is empty");
  }
  const Image rgb = as_rgb(condition.image);
  const Image thumb = resize_bilinear(rgb, kThumb, kThumb);
  std::vector<double> feats;
  feats.reserve(static_cast<std::size_t>(kImageFeatures));
  for (double v : thumb.pixels) feats.push_back(v - 0.5);
  const double n = static_cast<double>(rgb.height * rgb.width);
  for (int c = 0; c < 3; ++c) {
    double s = 0.0, ss = 0.0;
    for (std::int64_t i = 0; i < rgb.height * rgb.width; ++i) {
      const double v = rgb.pixels[static_cast<std::size_t>(i * 3 + c)];
      s += v;
      ss += v * v;
    }
    const double m = s / n;
    feats.push_back(m - 0.5);
    feats.push_back(std::sqrt(std::max(0.0, ss / n - m * m)));
  }
  return project_normalized(image_proj_, dim_, feats);
}

NoiseCodes NoiseCodes::zeros(std::int64_t shape_dim, std::int64_t appearance_dim) {
  return NoiseCodes{std::vector<double>(static_cast<std::size_t>(shape_dim), 0.0),
                    std::vector<double>(static_cast<std::size_t>(appearance_dim), 0.0)};
}

NoiseCodes sample_noise(std::int64_t shape_dim, std::int64_t appearance_dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  NoiseCodes z = NoiseCodes::zeros(shape_dim, appearance_dim);
  for (auto& v : z.shape) v = normal(rng);
  for (auto& v : z.appearance) v = normal(rng);
  return z;
}

std::span<const double> MatchingVector::condition() const {
  return std::span<const double>(values).subspan(0, static_cast<std::size_t>(dims.condition));
}

std::span<const double> MatchingVector::shape_code() const {
  return std::span<const double>(values).subspan(static_cast<std::size_t>(dims.condition),
                                                 static_cast<std::size_t>(dims.shape));
}

std::span<const double> MatchingVector::appearance_code() const {
  return std::span<const double>(values).subspan(
      static_cast<std::size_t>(dims.condition + dims.shape),
      static_cast<std::size_t>(dims.appearance));
}

MatchingVector build_matching_vector(const GlobalFeature& c, const NoiseCodes& z,
                                     const LatentDims& dims) {
  if (static_cast<std::int64_t>(c.size()) != dims.condition ||
      static_cast<std::int64_t>(z.shape.size()) != dims.shape ||
      static_cast<std::int64_t>(z.appearance.size()) != dims.appearance) {
    throw ShapeError("matching vector: got (" + std::to_string(c.size()) + ", " +
                     std::to_string(z.shape.size()) + ", " + std::to_string(z.appearance.size()) +
                     "), expected (" + std::to_string(dims.condition) + ", " +
                     std::to_string(dims.shape) + ", " + std::to_string(dims.appearance) + ")");
  }
  MatchingVector e;
  e.dims = dims;
  e.values.reserve(static_cast<std::size_t>(dims.matching()));
  e.values.insert(e.values.end(), c.values.begin(), c.values.end());
  e.values.insert(e.values.end(), z.shape.begin(), z.shape.end());
  e.values.insert(e.values.end(), z.appearance.begin(), z.appearance.end());
  return e;
}

Tensor row_tensor(std::span<const double> values) {
  return Tensor(Shape{1, static_cast<std::int64_t>(values.size())},
                std::vector<double>(values.begin(), values.end()));
}

}  // namespace cgnerf
