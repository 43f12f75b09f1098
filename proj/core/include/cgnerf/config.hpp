// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Training configuration as flat `key = value` text. Blank lines and lines
// starting with '#' are ignored; unknown keys and malformed values are errors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cgnerf/condition.hpp"
#include "cgnerf/discriminator.hpp"
#include "cgnerf/generator.hpp"
#include "cgnerf/losses.hpp"
#include "cgnerf/optim.hpp"
#include "cgnerf/synth.hpp"
#include "cgnerf/tensor.hpp"

namespace cgnerf {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  GeneratorConfig generator;
  std::int64_t disc_base_channels = 16;
  std::int64_t disc_max_channels = 64;
  std::int64_t disc_head_hidden = 64;

  LossWeights loss;
  bool enable_div = true;
  bool enable_pose_penalty = true;

  AdamOptions adam_g;
  AdamOptions adam_d;

  PosePrior prior;
  std::int64_t scenes = 16;
  std::int64_t views_per_scene = 8;
  ConditionKind condition = ConditionKind::kColor;
  double sketch_threshold = kDefaultSketchThreshold;

  std::int64_t batch_size = 8;
  std::int64_t steps = 500;
  std::uint64_t seed = 1;
  std::uint64_t encoder_seed = 1234;
  std::int64_t log_every = 50;
  std::int64_t checkpoint_every = 0;  // 0: only the final checkpoint
  std::int64_t metric_samples = 4;
  Precision precision = Precision::kFast32;

  void validate() const;
  DiscriminatorConfig discriminator() const;
  DatasetOptions dataset() const;
  /// Loss weights after the ablation switches are applied.
  LossWeights effective_loss() const;
};

/// Sets one key; throws ConfigError for unknown keys or unparsable values.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);
TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);
/// Every key in a fixed order, doubles printed round-trip exact.
std::string format_config(const TrainConfig& config);
std::vector<std::string> config_keys();

}  // namespace cgnerf
