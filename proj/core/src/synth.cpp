// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace cgnerf {
namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 unit(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  return {v[0] / n, v[1] / n, v[2] / n};
}

// Nearest positive hit distance, or +inf.
double intersect(const Ellipsoid& e, const Vec3& origin, const Vec3& dir) {
  Vec3 o, d;
  for (int k = 0; k < 3; ++k) {
    o[k] = (origin[k] - e.center[k]) / e.radii[k];
    d[k] = dir[k] / e.radii[k];
  }
  const double a = dot(d, d);
  const double b = 2.0 * dot(o, d);
  const double c = dot(o, o) - 1.0;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double root = std::sqrt(disc);
  const double t0 = (-b - root) / (2.0 * a);
  const double t1 = (-b + root) / (2.0 * a);
  if (t0 > 0.0) return t0;
  if (t1 > 0.0) return t1;
  return std::numeric_limits<double>::infinity();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string numbered(const char* stem, std::int64_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04lld.png", stem, static_cast<long long>(i));
  return buf;
}

void derive_conditions(DatasetRecord& r, double sketch_threshold) {
  r.gray = to_grayscale(r.canonical);
  r.sketch = sobel_sketch(r.canonical, sketch_threshold);
  r.low_res = downsample_low_res(r.canonical);
}

}  // namespace

const std::array<std::string, 8>& palette_names() {
  static const std::array<std::string, 8> names{"red",    "green",  "blue", "yellow",
                                                "purple", "orange", "cyan", "gray"};
  return names;
}

const std::array<Rgb, 8>& palette_albedos() {
  static const std::array<Rgb, 8> albedos{{{0.85, 0.15, 0.15},
                                           {0.20, 0.70, 0.25},
                                           {0.20, 0.30, 0.85},
                                           {0.90, 0.80, 0.15},
                                           {0.55, 0.25, 0.70},
                                           {0.95, 0.50, 0.10},
                                           {0.15, 0.75, 0.80},
                                           {0.50, 0.50, 0.50}}};
  return albedos;
}

SyntheticScene sample_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> unit_interval(0.0, 1.0);
  std::uniform_real_distribution<double> radius(0.12, 0.28);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  SyntheticScene scene;
  scene.light = unit({0.4, 0.5, 0.77});
  std::array<std::size_t, 8> colors{};
  std::iota(colors.begin(), colors.end(), std::size_t{0});
  std::shuffle(colors.begin(), colors.end(), rng);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    Ellipsoid e;
    // Uniform direction, radius up to 0.25.
    const double z = 2.0 * unit_interval(rng) - 1.0;
    const double phi = 2.0 * std::numbers::pi * unit_interval(rng);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double r = 0.25 * std::cbrt(unit_interval(rng));
    e.center = {r * s * std::cos(phi), r * z, r * s * std::sin(phi)};
    e.radii = {radius(rng), radius(rng), radius(rng)};
    e.color_index = colors[static_cast<std::size_t>(i)];
    const Rgb& base = palette_albedos()[e.color_index];
    for (int k = 0; k < 3; ++k) e.albedo[k] = std::clamp(base[k] + jitter(rng), 0.0, 1.0);
    scene.primitives.push_back(e);
  }
  return scene;
}

Image oracle_render(const SyntheticScene& scene, const CameraPose& pose, std::int64_t height,
                    std::int64_t width, double fov) {
  const RayBundle rays = generate_rays(pose, fov, height, width);
  Image img(height, width, 3);
  for (std::int64_t p = 0; p < rays.count(); ++p) {
    const Vec3& o = rays.origins[static_cast<std::size_t>(p)];
    const Vec3& d = rays.directions[static_cast<std::size_t>(p)];
    double best = std::numeric_limits<double>::infinity();
    const Ellipsoid* hit = nullptr;
    for (const auto& e : scene.primitives) {
      const double t = intersect(e, o, d);
      if (t < best) {
        best = t;
        hit = &e;
      }
    }
    const std::int64_t y = p / width, x = p % width;
    if (hit == nullptr) {
      for (int k = 0; k < 3; ++k) img.at(y, x, k) = scene.background[static_cast<std::size_t>(k)];
      continue;
    }
    Vec3 n;
    for (int k = 0; k < 3; ++k) {
      const double q = o[k] + best * d[k] - hit->center[k];
      n[k] = q / (hit->radii[k] * hit->radii[k]);
    }
    n = unit(n);
    const double lambert = std::max(0.0, dot(n, scene.light)) + kAmbient;
    for (int k = 0; k < 3; ++k) {
      img.at(y, x, k) = std::clamp(hit->albedo[static_cast<std::size_t>(k)] * lambert, 0.0, 1.0);
    }
  }
  return img;
}

std::string describe_scene(const SyntheticScene& scene) {
  if (scene.primitives.empty()) return "empty scene";
  const auto volume = [](const Ellipsoid& e) { return e.radii[0] * e.radii[1] * e.radii[2]; };
  const auto& big = *std::max_element(
      scene.primitives.begin(), scene.primitives.end(),
      [&](const Ellipsoid& a, const Ellipsoid& b) { return volume(a) < volume(b); });
  const double horizontal = std::max(big.radii[0], big.radii[2]);
  const double vertical = big.radii[1];
  const char* shape = "round";
  if (vertical > 1.25 * horizontal) {
    shape = "tall";
  } else if (horizontal > 1.25 * vertical) {
    shape = "wide";
  }
  return palette_names()[big.color_index] + " " + shape + " object";
}

CameraPose canonical_pose() { return CameraPose{1.0, 0.0, std::numbers::pi / 2}; }

ConditionInput DatasetRecord::condition(ConditionKind kind) const {
  switch (kind) {
    case ConditionKind::kColor: return ConditionInput::from_image(kind, canonical);
    case ConditionKind::kGray: return ConditionInput::from_image(kind, gray);
    case ConditionKind::kSketch: return ConditionInput::from_image(kind, sketch);
    case ConditionKind::kLowRes: return ConditionInput::from_image(kind, low_res);
    case ConditionKind::kText: return ConditionInput::from_text(text);
  }
  throw std::invalid_argument("unknown condition kind");
}

std::vector<DatasetRecord> make_dataset(const DatasetOptions& options, std::mt19937_64& rng) {
  if (options.scenes < 1 || options.views_per_scene < 1) {
    throw std::invalid_argument("dataset needs at least one scene and one view");
  }
  options.prior.validate();
  std::vector<DatasetRecord> records;
  records.reserve(static_cast<std::size_t>(options.scenes * options.views_per_scene));
  for (std::int64_t s = 0; s < options.scenes; ++s) {
    const std::uint64_t seed = rng();
    const SyntheticScene scene = sample_scene(seed);
    DatasetRecord base;
    base.scene_id = s;
    base.scene_seed = seed;
    base.canonical = oracle_render(scene, canonical_pose(), options.height, options.width, options.fov);
    base.text = describe_scene(scene);
    derive_conditions(base, options.sketch_threshold);
    for (std::int64_t v = 0; v < options.views_per_scene; ++v) {
      DatasetRecord r = base;
      r.pose = sample_pose(options.prior, rng);
      r.image = oracle_render(scene, r.pose, options.height, options.width, options.fov);
      records.push_back(std::move(r));
    }
  }
  return records;
}

void save_dataset(const std::filesystem::path& dir, const std::vector<DatasetRecord>& records) {
  std::filesystem::create_directories(dir);
  std::ostringstream meta;
  std::map<std::int64_t, const DatasetRecord*> scenes;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    write_png(dir / numbered("record", static_cast<std::int64_t>(i)), r.image);
    scenes.emplace(r.scene_id, &r);
    meta << "record=" << i << " scene=" << r.scene_id << " seed=" << r.scene_seed
         << " rotation=" << format_double(r.pose.rotation)
         << " elevation=" << format_double(r.pose.elevation) << " text=" << r.text << "\n";
  }
  for (const auto& [id, r] : scenes) write_png(dir / numbered("scene", id), r->canonical);
  write_file_atomic(dir / "metadata.txt", meta.str());
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& dir, double sketch_threshold) {
  std::istringstream meta(read_file(dir / "metadata.txt"));
  std::vector<DatasetRecord> records;
  std::map<std::int64_t, Image> canonical;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    // text= is last and may contain spaces.
    const auto text_pos = line.find(" text=");
    if (text_pos == std::string::npos) throw IoError("metadata line without text: " + line);
    DatasetRecord r;
    r.text = line.substr(text_pos + 6);
    std::istringstream fields(line.substr(0, text_pos));
    std::string kv;
    std::int64_t index = -1;
    while (fields >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw IoError("malformed metadata field '" + kv + "'");
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "record") {
        index = std::stoll(value);
      } else if (key == "scene") {
        r.scene_id = std::stoll(value);
      } else if (key == "seed") {
        r.scene_seed = std::stoull(value);
      } else if (key == "rotation") {
        r.pose.rotation = std::stod(value);
      } else if (key == "elevation") {
        r.pose.elevation = std::stod(value);
      } else {
        throw IoError("unknown metadata key '" + key + "'");
      }
    }
    if (index != static_cast<std::int64_t>(records.size())) throw IoError("metadata records out of order");
    r.image = read_png(dir / numbered("record", index));
    auto it = canonical.find(r.scene_id);
    if (it == canonical.end()) {
      it = canonical.emplace(r.scene_id, read_png(dir / numbered("scene", r.scene_id))).first;
    }
    r.canonical = it->second;
    derive_conditions(r, sketch_threshold);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace cgnerf
