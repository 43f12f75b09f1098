// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cgnerf/tensor.hpp"

namespace cgnerf {

/// Interleaved (height x width x channels) image with values nominally in [0, 1].
struct Image {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::int64_t h, std::int64_t w, std::int64_t c, double fill = 0.0)
      : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h * w * c), fill) {}

  double& at(std::int64_t y, std::int64_t x, std::int64_t c) {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  double at(std::int64_t y, std::int64_t x, std::int64_t c) const {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  bool operator==(const Image&) const = default;
};

/// [C x H x W] tensor view of an image (copy).
Tensor image_to_tensor(const Image& image);
Image tensor_to_image(const Tensor& chw);

/// Side-by-side concatenation of equally sized images.
Image hstack(const std::vector<Image>& frames);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// 8-bit PNG (gray or RGB by channel count), written atomically.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

}  // namespace cgnerf
