// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Alternating conditional GAN training (one discriminator step, then one
// generator step), metric logging and checkpoint/resume.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgnerf/checkpoint.hpp"
#include "cgnerf/condition.hpp"
#include "cgnerf/config.hpp"
#include "cgnerf/discriminator.hpp"
#include "cgnerf/generator.hpp"
#include "cgnerf/optim.hpp"
#include "cgnerf/synth.hpp"

namespace cgnerf {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DiscriminatorStepStats {
  double loss = 0.0;
  double adversarial = 0.0;  // without penalty
  double penalty = 0.0;
  double pose_reconstruction = 0.0;
  double accuracy = 0.0;  // real logit > 0 and fake logit < 0
};

struct GeneratorStepStats {
  double loss = 0.0;
  double adversarial = 0.0;
  double diversity = 0.0;
  double pose_penalty = 0.0;
};

struct GeneratorStepOptions {
  /// Reuse the first noise draw for the second image of each pair.
  bool identical_noise = false;
};

struct MetricsRow {
  std::int64_t step = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double l_div = 0.0;
  double l_pose = 0.0;
  double pose_std_r = 0.0;
  double pose_std_e = 0.0;
  double diversity = 0.0;
};

std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);

struct DiscriminatorEvaluation {
  double accuracy = 0.0;
  double pose_error = 0.0;  // mean |wrapped angle error| over fakes and both components
};

/// Splits a 64-bit seed into independent sub-streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  const TrainConfig& config() const { return config_; }
  Generator& generator() { return generator_; }
  const Generator& generator() const { return generator_; }
  Discriminator& discriminator() { return discriminator_; }
  const Discriminator& discriminator() const { return discriminator_; }
  const std::vector<DatasetRecord>& dataset() const { return dataset_; }
  const std::vector<GlobalFeature>& conditions() const { return conditions_; }
  const ToyEncoder& encoder() const { return encoder_; }
  std::int64_t step() const { return step_; }

  DiscriminatorStepStats discriminator_step();
  GeneratorStepStats generator_step(const GeneratorStepOptions& options = {});
  /// One D step and one G step; returns the row for this step (pose and
  /// diversity metrics are filled only when `with_metrics`).
  MetricsRow train_step(bool with_metrics);
  /// Pose spread (from the discriminator head) and diversity at the
  /// canonical pose for the first record's condition.
  void fill_metrics(MetricsRow& row) const;

  DiscriminatorEvaluation evaluate_discriminator(std::int64_t batches, std::uint64_t seed) const;

  Checkpoint checkpoint() const;
  /// Restores weights, optimizer moments, step and RNG. Shape conflicts raise
  /// CheckpointMismatchError.
  void restore(const Checkpoint& checkpoint);

 private:
  std::vector<std::size_t> sample_batch();
  std::vector<double> matching_row(std::size_t record, const NoiseCodes& z) const;

  TrainConfig config_;
  ToyEncoder encoder_;
  std::vector<DatasetRecord> dataset_;
  std::vector<GlobalFeature> conditions_;
  Generator generator_;
  Discriminator discriminator_;
  Adam adam_g_;
  Adam adam_d_;
  std::mt19937_64 rng_;
  std::int64_t step_ = 0;
};

struct TrainOutputs {
  std::vector<MetricsRow> log;
  std::filesystem::path checkpoint_path;
};

/// Runs until config.steps, writing metrics.csv and checkpoint.bin into
/// `out_dir` (atomically). With `resume`, continues from that checkpoint and
/// keeps earlier metrics rows already present in out_dir.
TrainOutputs train_loop(const TrainConfig& config, const std::filesystem::path& out_dir,
                        const Checkpoint* resume = nullptr,
                        const std::function<void(const MetricsRow&)>& on_row = {});

}  // namespace cgnerf
