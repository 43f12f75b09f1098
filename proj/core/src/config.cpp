// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include "cgnerf/image.hpp"

namespace cgnerf {
namespace {

struct Field {
  const char* key;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) +
                    "' as " + expected);
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "integer");
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string s(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "number");
  }
  if (used != s.size()) bad_value(key, value, "number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "boolean");
}

std::string show(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Member>
Field int_field(const char* key, Member member) {
  return {key,
          [=](TrainConfig& c, std::string_view v) {
            auto& ref = std::invoke(member, c);
            ref = parse_int<std::remove_reference_t<decltype(ref)>>(key, v);
          },
          [=](const TrainConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

template <typename Member>
Field double_field(const char* key, Member member) {
  return {key, [=](TrainConfig& c, std::string_view v) { std::invoke(member, c) = parse_double(key, v); },
          [=](const TrainConfig& c) { return show(std::invoke(member, c)); }};
}

template <typename Member>
Field bool_field(const char* key, Member member) {
  return {key, [=](TrainConfig& c, std::string_view v) { std::invoke(member, c) = parse_bool(key, v); },
          [=](const TrainConfig& c) { return std::string(std::invoke(member, c) ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
  using C = TrainConfig;
  static const std::vector<Field> table = {
      int_field("condition_dim", [](auto& c) -> auto& { return c.generator.latent.condition; }),
      int_field("shape_dim", [](auto& c) -> auto& { return c.generator.latent.shape; }),
      int_field("appearance_dim", [](auto& c) -> auto& { return c.generator.latent.appearance; }),
      int_field("feature_dim", [](auto& c) -> auto& { return c.generator.feature_dim; }),
      int_field("hidden", [](auto& c) -> auto& { return c.generator.hidden; }),
      int_field("shape_layers", [](auto& c) -> auto& { return c.generator.shape_layers; }),
      int_field("appearance_layers", [](auto& c) -> auto& { return c.generator.appearance_layers; }),
      int_field("mapping_hidden", [](auto& c) -> auto& { return c.generator.mapping_hidden; }),
      int_field("mapping_depth", [](auto& c) -> auto& { return c.generator.mapping_depth; }),
      int_field("feature_height", [](auto& c) -> auto& { return c.generator.feature_height; }),
      int_field("feature_width", [](auto& c) -> auto& { return c.generator.feature_width; }),
      int_field("image_height", [](auto& c) -> auto& { return c.generator.image_height; }),
      int_field("image_width", [](auto& c) -> auto& { return c.generator.image_width; }),
      int_field("samples", [](auto& c) -> auto& { return c.generator.samples; }),
      double_field("fov", [](auto& c) -> auto& { return c.generator.fov; }),
      double_field("near", [](auto& c) -> auto& { return c.generator.near; }),
      double_field("far", [](auto& c) -> auto& { return c.generator.far; }),
      double_field("frequency_scale", [](auto& c) -> auto& { return c.generator.frequency_scale; }),
      double_field("frequency_offset", [](auto& c) -> auto& { return c.generator.frequency_offset; }),
      int_field("disc_base_channels", &C::disc_base_channels),
      int_field("disc_max_channels", &C::disc_max_channels),
      int_field("disc_head_hidden", &C::disc_head_hidden),
      double_field("lambda_div", [](auto& c) -> auto& { return c.loss.lambda_div; }),
      double_field("lambda_pose", [](auto& c) -> auto& { return c.loss.lambda_pose; }),
      double_field("penalty_scale", [](auto& c) -> auto& { return c.loss.penalty_scale; }),
      double_field("penalty_exponent", [](auto& c) -> auto& { return c.loss.penalty_exponent; }),
      bool_field("enable_div", &C::enable_div),
      bool_field("enable_pose_penalty", &C::enable_pose_penalty),
      double_field("lr_g", [](auto& c) -> auto& { return c.adam_g.learning_rate; }),
      double_field("lr_d", [](auto& c) -> auto& { return c.adam_d.learning_rate; }),
      {"beta1",
       [](C& c, std::string_view v) { c.adam_g.beta1 = c.adam_d.beta1 = parse_double("beta1", v); },
       [](const C& c) { return show(c.adam_g.beta1); }},
      {"beta2",
       [](C& c, std::string_view v) { c.adam_g.beta2 = c.adam_d.beta2 = parse_double("beta2", v); },
       [](const C& c) { return show(c.adam_g.beta2); }},
      {"adam_eps",
       [](C& c, std::string_view v) {
         c.adam_g.epsilon = c.adam_d.epsilon = parse_double("adam_eps", v);
       },
       [](const C& c) { return show(c.adam_g.epsilon); }},
      double_field("rotation_min", [](auto& c) -> auto& { return c.prior.rotation_min; }),
      double_field("rotation_max", [](auto& c) -> auto& { return c.prior.rotation_max; }),
      double_field("elevation_min", [](auto& c) -> auto& { return c.prior.elevation_min; }),
      double_field("elevation_max", [](auto& c) -> auto& { return c.prior.elevation_max; }),
      int_field("scenes", &C::scenes),
      int_field("views_per_scene", &C::views_per_scene),
      {"condition",
       [](C& c, std::string_view v) {
         try {
           c.condition = parse_condition_kind(v);
         } catch (const std::invalid_argument&) {
           bad_value("condition", v, "condition kind");
         }
       },
       [](const C& c) { return std::string(condition_name(c.condition)); }},
      double_field("sketch_threshold", &C::sketch_threshold),
      int_field("batch_size", &C::batch_size),
      int_field("steps", &C::steps),
      int_field("seed", &C::seed),
      int_field("encoder_seed", &C::encoder_seed),
      int_field("log_every", &C::log_every),
      int_field("checkpoint_every", &C::checkpoint_every),
      int_field("metric_samples", &C::metric_samples),
      {"precision",
       [](C& c, std::string_view v) {
         if (v == "fast32") {
           c.precision = Precision::kFast32;
         } else if (v == "exact64") {
           c.precision = Precision::kExact64;
         } else {
           bad_value("precision", v, "fast32 or exact64");
         }
       },
       [](const C& c) {
         return std::string(c.precision == Precision::kFast32 ? "fast32" : "exact64");
       }},
  };
  return table;
}

}  // namespace

void TrainConfig::validate() const {
  generator.validate();
  discriminator().validate();
  loss.validate();
  adam_g.validate();
  adam_d.validate();
  prior.validate();
  if (generator.image_height % kLowResFactor != 0 || generator.image_width % kLowResFactor != 0) {
    throw ConfigError("image size must be divisible by 16 for the low-res condition");
  }
  if (scenes < 1 || views_per_scene < 1) throw ConfigError("dataset needs scenes and views");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (mismatch pairs need a derangement)");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (metric_samples < 2) throw ConfigError("metric_samples must be >= 2");
  if (sketch_threshold < 0.0 || sketch_threshold > 1.0) throw ConfigError("sketch_threshold outside [0, 1]");
}

DiscriminatorConfig TrainConfig::discriminator() const {
  DiscriminatorConfig d;
  d.image_height = generator.image_height;
  d.image_width = generator.image_width;
  d.base_channels = disc_base_channels;
  d.max_channels = disc_max_channels;
  d.head_hidden = disc_head_hidden;
  d.matching_dim = generator.latent.matching();
  return d;
}

DatasetOptions TrainConfig::dataset() const {
  DatasetOptions o;
  o.scenes = scenes;
  o.views_per_scene = views_per_scene;
  o.height = generator.image_height;
  o.width = generator.image_width;
  o.fov = generator.fov;
  o.sketch_threshold = sketch_threshold;
  o.prior = prior;
  return o;
}

LossWeights TrainConfig::effective_loss() const {
  LossWeights w = loss;
  if (!enable_div) w.lambda_div = 0.0;
  if (!enable_pose_penalty) w.lambda_pose = 0.0;
  return w;
}

void set_config_value(TrainConfig& config, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

TrainConfig parse_config(std::string_view text) {
  TrainConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(config, trim(std::string_view(t).substr(0, eq)),
                     trim(std::string_view(t).substr(eq + 1)));
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_config(text);
}

std::string format_config(const TrainConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace cgnerf
