// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "cgnerf/losses.hpp"
#include "cgnerf/ops.hpp"
#include "cgnerf/optim.hpp"

namespace cgnerf {
namespace {

constexpr double kPi = std::numbers::pi;

Tensor pose_row(const CameraPose& pose) {
  return Tensor(Shape{1, 2}, std::vector<double>{pose.rotation, pose.elevation});
}

}  // namespace

std::array<double, 2> DiscriminatorPoseEstimator::estimate(const Tensor& image) const {
  NoGradScope no_grad;
  const Tensor p = disc_.estimate_pose(disc_.features(image));
  return {canonical_angle(p[0]), p[1]};
}

PoseOracle::PoseOracle(std::int64_t height, std::int64_t width, const PoseOracleOptions& options)
    : height_(height), width_(width) {
  DiscriminatorConfig geometry;
  geometry.image_height = height;
  geometry.image_width = width;
  geometry.base_channels = options.base_channels;
  geometry.max_channels = options.max_channels;
  geometry.validate();
  std::mt19937_64 rng(options.seed);
  std::int64_t in = 3, ch = options.base_channels;
  for (std::int64_t s = 0; s < geometry.stages(); ++s) {
    Linear c;
    c.weight = params_.add("oracle.conv" + std::to_string(s) + ".weight",
                           he_uniform({ch, in, 4, 4}, in * 16, rng));
    c.bias = params_.add("oracle.conv" + std::to_string(s) + ".bias", Tensor::zeros({ch}));
    convs_.push_back(c);
    in = ch;
    ch = std::min(ch * 2, options.max_channels);
  }
  const std::int64_t f = geometry.feature_dim();
  Linear h0, h1;
  h0.weight = params_.add("oracle.head0.weight", he_uniform({options.hidden, f}, f, rng));
  h0.bias = params_.add("oracle.head0.bias", Tensor::zeros({options.hidden}));
  h1.weight = params_.add("oracle.head1.weight", he_uniform({2, options.hidden}, options.hidden, rng, 0.5));
  h1.bias = params_.add("oracle.head1.bias", Tensor::zeros({2}));
  head_ = {h0, h1};
}

Tensor PoseOracle::predict(const Tensor& image) const {
  const Shape expected{3, height_, width_};
  if (image.shape() != expected) {
    throw ShapeError("pose oracle input " + shape_string(image.shape()) + ", expected " +
                     shape_string(expected));
  }
  Tensor h = image;
  for (const auto& c : convs_) h = leaky_relu(conv2d(h, c.weight, c.bias, 2, 1));
  h = reshape(h, {1, h.numel()});
  h = leaky_relu(linear(h, head_[0].weight, head_[0].bias));
  const Tensor raw = linear(h, head_[1].weight, head_[1].bias);
  const Tensor ranges = Tensor::from({2}, {2.0 * kPi, kPi});
  const Tensor offset = Tensor::from({2}, {-kPi, 0.0});
  return add(mul(sigmoid(raw), ranges), offset);
}

std::array<double, 2> PoseOracle::estimate(const Tensor& image) const {
  NoGradScope no_grad;
  const Tensor p = predict(image);
  return {p[0], p[1]};
}

PoseOracle train_pose_oracle(std::span<const DatasetRecord> dataset, const PoseOracleOptions& options,
                             PoseOracleReport* report) {
  if (dataset.empty()) throw std::invalid_argument("pose oracle needs a non-empty dataset");
  if (options.epochs < 1 || options.batch_size < 1) {
    throw std::invalid_argument("pose oracle needs positive epochs and batch size");
  }
  const auto& first = dataset.front().image;
  PoseOracle oracle(first.height, first.width, options);
  AdamOptions adam_options;
  adam_options.learning_rate = options.learning_rate;
  adam_options.beta1 = 0.9;
  adam_options.beta2 = 0.999;
  Adam adam(oracle.parameters().tensors(), adam_options);

  std::vector<Tensor> images;
  images.reserve(dataset.size());
  for (const auto& r : dataset) images.push_back(image_to_tensor(r.image));

  std::mt19937_64 rng(options.seed ^ 0x5bd1e995ull);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  PoseOracleReport local;
  const auto bs = static_cast<std::size_t>(options.batch_size);
  for (std::int64_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::vector<Tensor> preds, targets;
      for (std::size_t i = start; i < end; ++i) {
        preds.push_back(oracle.predict(images[order[i]]));
        targets.push_back(pose_row(dataset[order[i]].pose));
      }
      const Tensor loss = pose_reconstruction(concat(preds, 0), concat(targets, 0));
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw PoseOracleError("pose oracle loss became non-finite in epoch " + std::to_string(epoch));
      }
      const auto grads = grad(loss, adam.params());
      adam.step(grads);
      epoch_loss += value;
      ++batches;
    }
    local.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
  }
  local.final_loss = local.epoch_losses.back();
  if (report != nullptr) *report = local;
  if (!(local.final_loss <= options.max_final_loss)) {
    throw PoseOracleError("pose oracle did not converge: final loss " +
                          std::to_string(local.final_loss) + " > " +
                          std::to_string(options.max_final_loss));
  }
  return oracle;
}

std::array<double, 2> pose_error(const PoseEstimator& estimator,
                                 std::span<const DatasetRecord> records) {
  if (records.empty()) throw std::invalid_argument("pose_error needs records");
  std::array<double, 2> err{0.0, 0.0};
  for (const auto& r : records) {
    const auto p = estimator.estimate(image_to_tensor(r.image));
    err[0] += std::abs(canonical_angle(p[0] - r.pose.rotation));
    err[1] += std::abs(canonical_angle(p[1] - r.pose.elevation));
  }
  const auto n = static_cast<double>(records.size());
  return {err[0] / n, err[1] / n};
}

double circular_std(std::span<const double> angles) {
  if (angles.empty()) throw std::invalid_argument("circular_std of no angles");
  double s = 0.0, c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  const double n = static_cast<double>(angles.size());
  const double resultant = std::hypot(s, c) / n;
  if (resultant >= 1.0) return 0.0;
  return std::sqrt(-2.0 * std::log(resultant));
}

PoseSpread pose_consistency_std(const Generator& generator, const PoseEstimator& estimator,
                                const CameraPose& pose, const GlobalFeature& condition,
                                std::int64_t n, std::mt19937_64& rng) {
  if (n < 2) throw std::invalid_argument("pose_consistency_std needs at least two samples");
  NoGradScope no_grad;
  const auto& latent = generator.config().latent;
  const RaySamples rays = generator.sample_rays(pose, rng);
  std::vector<double> rotation, elevation;
  for (std::int64_t i = 0; i < n; ++i) {
    const NoiseCodes z = sample_noise(latent.shape, latent.appearance, rng);
    const auto est = estimator.estimate(generator.render(rays, LatentRows::from(condition, z)));
    rotation.push_back(est[0]);
    elevation.push_back(est[1]);
  }
  return {circular_std(rotation), circular_std(elevation)};
}

double diversity_score(std::span<const Tensor> images) {
  if (images.size() < 2) throw std::invalid_argument("diversity_score needs at least two images");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      if (images[i].shape() != images[j].shape()) throw ShapeError("diversity_score: shapes differ");
      const auto a = images[i].data(), b = images[j].data();
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
      total += s / static_cast<double>(a.size());
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

double diversity_score(const Generator& generator, const GlobalFeature& condition,
                       const CameraPose& pose, std::int64_t n, std::mt19937_64& rng) {
  if (n < 2) throw std::invalid_argument("diversity_score needs at least two samples");
  NoGradScope no_grad;
  const auto& latent = generator.config().latent;
  const RaySamples rays = generator.sample_rays(pose, rng);
  std::vector<Tensor> images;
  for (std::int64_t i = 0; i < n; ++i) {
    const NoiseCodes z = sample_noise(latent.shape, latent.appearance, rng);
    images.push_back(generator.render(rays, LatentRows::from(condition, z)));
  }
  return diversity_score(images);
}

GeneratorMetrics evaluate_generator(const Generator& generator, const PoseEstimator& estimator,
                                    std::span<const GlobalFeature> conditions,
                                    std::int64_t samples, std::uint64_t seed) {
  if (conditions.empty()) throw std::invalid_argument("evaluate_generator needs conditions");
  std::mt19937_64 rng(seed);
  GeneratorMetrics m;
  for (const auto& c : conditions) {
    const PoseSpread s = pose_consistency_std(generator, estimator, canonical_pose(), c, samples, rng);
    m.pose_std_rotation += s.rotation;
    m.pose_std_elevation += s.elevation;
    m.diversity += diversity_score(generator, c, canonical_pose(), samples, rng);
  }
  const auto n = static_cast<double>(conditions.size());
  m.pose_std_rotation /= n;
  m.pose_std_elevation /= n;
  m.diversity /= n;
  return m;
}

}  // namespace cgnerf
