// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <system_error>

#include "cgnerf/image.hpp"

namespace cgnerf {

Tensor image_to_tensor(const Image& image) {
  const std::int64_t c = image.channels, h = image.height, w = image.width;
  std::vector<double> chw(static_cast<std::size_t>(c * h * w));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        chw[static_cast<std::size_t>((ch * h + y) * w + x)] = image.at(y, x, ch);
      }
    }
  }
  return Tensor(Shape{c, h, w}, std::move(chw));
}

Image tensor_to_image(const Tensor& t) {
  if (t.ndim() != 3) throw ShapeError("tensor_to_image expects [C x H x W], got " + shape_string(t.shape()));
  const std::int64_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  Image img(h, w, c);
  const auto d = t.data();
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        img.at(y, x, ch) = d[static_cast<std::size_t>((ch * h + y) * w + x)];
      }
    }
  }
  return img;
}

Image hstack(const std::vector<Image>& frames) {
  if (frames.empty()) return {};
  const auto& f0 = frames.front();
  Image out(f0.height, f0.width * static_cast<std::int64_t>(frames.size()), f0.channels);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    if (f.height != f0.height || f.width != f0.width || f.channels != f0.channels) {
      throw ShapeError("hstack: frames differ in size");
    }
    for (std::int64_t y = 0; y < f.height; ++y) {
      for (std::int64_t x = 0; x < f.width; ++x) {
        for (std::int64_t c = 0; c < f.channels; ++c) {
          out.at(y, static_cast<std::int64_t>(k) * f0.width + x, c) = f.at(y, x, c);
        }
      }
    }
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void png_no_flush(png_structp) {}

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw IoError(std::string("png: ") + msg); }

void png_warn(png_structp, png_const_charp) {}

struct ReadCursor {
  const std::string* bytes;
  std::size_t offset = 0;
};

void png_consume(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->bytes->size()) png_error(png, "truncated file");
  std::copy_n(cur->bytes->data() + cur->offset, length, reinterpret_cast<char*>(data));
  cur->offset += length;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw IoError("write_png supports 1 or 3 channels, got " + std::to_string(image.channels));
  }
  std::string bytes;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::unique_ptr<png_structp, void (*)(png_structp*)> guard(&png, [](png_structp* p) {
    png_destroy_write_struct(p, nullptr);
  });
  png_set_write_fn(png, &bytes, png_append, png_no_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width * image.channels));
  for (std::int64_t y = 0; y < image.height; ++y) {
    for (std::int64_t x = 0; x < image.width; ++x) {
      for (std::int64_t c = 0; c < image.channels; ++c) {
        row[static_cast<std::size_t>(x * image.channels + c)] = to_byte(image.at(y, x, c));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_info_struct(png, &info);
  write_file_atomic(path, bytes);
}

Image read_png(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};
  ReadCursor cursor{&bytes, 0};
  png_set_read_fn(png, &cursor, png_consume);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const auto w = static_cast<std::int64_t>(png_get_image_width(png, info));
  const auto h = static_cast<std::int64_t>(png_get_image_height(png, info));
  const auto c = static_cast<std::int64_t>(png_get_channels(png, info));
  Image img(h, w, c);
  std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
  for (std::int64_t y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (std::int64_t x = 0; x < w * c; ++x) {
      img.pixels[static_cast<std::size_t>(y * w * c + x)] = row[static_cast<std::size_t>(x)] / 255.0;
    }
  }
  return img;
}

}  // namespace cgnerf
