// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Evaluation: a supervised pose regressor trained on synthetic renders,
// circular dispersion of estimated poses across noise samples, and a
// pairwise pixel-distance diversity score.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "cgnerf/discriminator.hpp"
#include "cgnerf/generator.hpp"
#include "cgnerf/nn.hpp"
#include "cgnerf/synth.hpp"

namespace cgnerf {

class PoseEstimator {
 public:
  virtual ~PoseEstimator() = default;
  /// (rotation, elevation) in radians for a [3 x H x W] image.
  virtual std::array<double, 2> estimate(const Tensor& image) const = 0;
};

/// Uses the discriminator's auxiliary pose head.
class DiscriminatorPoseEstimator final : public PoseEstimator {
 public:
  explicit DiscriminatorPoseEstimator(const Discriminator& d) : disc_(d) {}
  std::array<double, 2> estimate(const Tensor& image) const override;

 private:
  const Discriminator& disc_;
};

struct PoseOracleOptions {
  std::int64_t epochs = 40;
  std::int64_t batch_size = 8;
  double learning_rate = 1e-3;
  std::int64_t base_channels = 16;
  std::int64_t max_channels = 64;
  std::int64_t hidden = 64;
  std::uint64_t seed = 7;
  /// Training is reported as failed when the last epoch's mean loss exceeds this.
  double max_final_loss = 0.1;
};

/// Convolutional regressor. Its rotation output 2pi * sigmoid(u) - pi is
/// centered on the rotation prior, so the [-pi, pi] wrap lies far from the
/// training poses; elevation is pi * sigmoid(u).
class PoseOracle final : public PoseEstimator {
 public:
  PoseOracle(std::int64_t height, std::int64_t width, const PoseOracleOptions& options);

  ParameterSet& parameters() { return params_; }
  /// [3 x H x W] -> [1 x 2] differentiable prediction.
  Tensor predict(const Tensor& image) const;
  std::array<double, 2> estimate(const Tensor& image) const override;

 private:
  struct Linear {
    Tensor weight;
    Tensor bias;
  };
  std::int64_t height_;
  std::int64_t width_;
  ParameterSet params_;
  std::vector<Linear> convs_;
  std::vector<Linear> head_;
};

class PoseOracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PoseOracleReport {
  double final_loss = 0.0;
  std::vector<double> epoch_losses;
};

/// Supervised training with the cosine pose loss. Throws PoseOracleError on a
/// non-finite loss or when the final loss exceeds options.max_final_loss.
PoseOracle train_pose_oracle(std::span<const DatasetRecord> dataset, const PoseOracleOptions& options,
                             PoseOracleReport* report = nullptr);

/// Mean absolute wrapped angular error per component over records.
std::array<double, 2> pose_error(const PoseEstimator& estimator,
                                 std::span<const DatasetRecord> records);

/// sqrt(-2 ln R) where R is the mean resultant length; 0 when R >= 1.
double circular_std(std::span<const double> angles);

struct PoseSpread {
  double rotation = 0.0;
  double elevation = 0.0;
};

/// Circular std of estimated angles over n generations at one pose and
/// condition with fresh noise codes. All generations share one ray sampling.
PoseSpread pose_consistency_std(const Generator& generator, const PoseEstimator& estimator,
                                const CameraPose& pose, const GlobalFeature& condition,
                                std::int64_t n, std::mt19937_64& rng);

/// Mean over unordered pairs of the mean absolute pixel difference.
double diversity_score(std::span<const Tensor> images);
/// diversity_score over n generations at a fixed pose and condition.
double diversity_score(const Generator& generator, const GlobalFeature& condition,
                       const CameraPose& pose, std::int64_t n, std::mt19937_64& rng);

struct GeneratorMetrics {
  double pose_std_rotation = 0.0;
  double pose_std_elevation = 0.0;
  double diversity = 0.0;
};

/// Averages pose_consistency_std and diversity_score over `conditions` at
/// the canonical pose, with `samples` generations per condition.
GeneratorMetrics evaluate_generator(const Generator& generator, const PoseEstimator& estimator,
                                    std::span<const GlobalFeature> conditions,
                                    std::int64_t samples, std::uint64_t seed);

}  // namespace cgnerf
