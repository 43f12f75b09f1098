// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "cgnerf/image.hpp"
#include "cgnerf/losses.hpp"
#include "cgnerf/metrics.hpp"
#include "cgnerf/ops.hpp"

namespace cgnerf {
namespace {

const TrainConfig& validated(const TrainConfig& c) {
  c.validate();
  return c;
}

std::vector<DatasetRecord> build_dataset(const TrainConfig& c) {
  std::mt19937_64 rng(derive_seed(c.seed, 4));
  return make_dataset(c.dataset(), rng);
}

std::vector<GlobalFeature> encode_all(const TrainConfig& c, const ToyEncoder& encoder,
                                      const std::vector<DatasetRecord>& records) {
  std::vector<GlobalFeature> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encoder.encode(r.condition(c.condition)));
  return out;
}

Tensor pose_rows(const std::vector<CameraPose>& poses) {
  std::vector<double> v;
  for (const auto& p : poses) {
    v.push_back(p.rotation);
    v.push_back(p.elevation);
  }
  return Tensor(Shape{static_cast<std::int64_t>(poses.size()), 2}, std::move(v));
}

Tensor stack_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<double> v;
  for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
  return Tensor(Shape{static_cast<std::int64_t>(rows.size()),
                      static_cast<std::int64_t>(rows.front().size())},
                std::move(v));
}

void require_finite(double value, const char* what, std::int64_t step) {
  if (!std::isfinite(value)) {
    throw TrainingError(std::string("non-finite ") + what + " at step " + std::to_string(step));
  }
}

std::string show(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over (seed, stream).
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string metrics_header() {
  return "step,loss_d,loss_g,l_div,l_pose,pose_std_r,pose_std_e,diversity";
}

std::string format_metrics_row(const MetricsRow& r) {
  return std::to_string(r.step) + "," + show(r.loss_d) + "," + show(r.loss_g) + "," +
         show(r.l_div) + "," + show(r.l_pose) + "," + show(r.pose_std_r) + "," +
         show(r.pose_std_e) + "," + show(r.diversity);
}

Trainer::Trainer(TrainConfig config)
    : config_(validated(config)),
      encoder_(config_.generator.latent.condition, config_.encoder_seed),
      dataset_(build_dataset(config_)),
      conditions_(encode_all(config_, encoder_, dataset_)),
      generator_(config_.generator, derive_seed(config_.seed, 1)),
      discriminator_(config_.discriminator(), derive_seed(config_.seed, 2)),
      adam_g_(generator_.parameters().tensors(), config_.adam_g),
      adam_d_(discriminator_.parameters().tensors(), config_.adam_d),
      rng_(derive_seed(config_.seed, 3)) {}

std::vector<std::size_t> Trainer::sample_batch() {
  const auto b = static_cast<std::size_t>(config_.batch_size);
  const auto scenes = static_cast<std::size_t>(config_.scenes);
  const auto views = static_cast<std::size_t>(config_.views_per_scene);
  std::vector<std::size_t> out;
  if (scenes >= b) {
    // Distinct scenes so the cyclic shift always yields a true mismatch.
    std::vector<std::size_t> ids(scenes);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    for (std::size_t i = 0; i < b; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, scenes - 1);
      std::swap(ids[i], ids[pick(rng_)]);
      std::uniform_int_distribution<std::size_t> view(0, views - 1);
      out.push_back(ids[i] * views + view(rng_));
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, dataset_.size() - 1);
    for (std::size_t i = 0; i < b; ++i) out.push_back(pick(rng_));
  }
  return out;
}

std::vector<double> Trainer::matching_row(std::size_t record, const NoiseCodes& z) const {
  return build_matching_vector(conditions_[record], z, config_.generator.latent).values;
}

DiscriminatorStepStats Trainer::discriminator_step() {
  PrecisionScope precision(config_.precision);
  const auto& latent = config_.generator.latent;
  const auto batch = sample_batch();
  const std::size_t b = batch.size();

  std::vector<Tensor> real, fake;
  std::vector<std::vector<double>> e_real, e_mismatch, e_fake;
  std::vector<CameraPose> fake_poses;
  for (std::size_t i = 0; i < b; ++i) {
    real.push_back(image_to_tensor(dataset_[batch[i]].image));
    e_real.push_back(matching_row(batch[i], sample_noise(latent.shape, latent.appearance, rng_)));
    e_mismatch.push_back(
        matching_row(batch[(i + 1) % b], sample_noise(latent.shape, latent.appearance, rng_)));
  }
  {
    NoGradScope frozen_generator;
    for (std::size_t i = 0; i < b; ++i) {
      const CameraPose pose = sample_pose(config_.prior, rng_);
      const NoiseCodes z = sample_noise(latent.shape, latent.appearance, rng_);
      fake.push_back(generator_.generate(pose, conditions_[batch[i]], z, rng_));
      e_fake.push_back(matching_row(batch[i], z));
      fake_poses.push_back(pose);
    }
  }

  const Tensor feats_real = discriminator_.features(real);
  const Tensor feats_fake = discriminator_.features(fake);
  const Tensor logits_real = discriminator_.match_logit(feats_real, stack_rows(e_real));
  const Tensor logits_mismatch = discriminator_.match_logit(feats_real, stack_rows(e_mismatch));
  const Tensor logits_fake = discriminator_.match_logit(feats_fake, stack_rows(e_fake));
  const Tensor reconstruction =
      pose_reconstruction(discriminator_.estimate_pose(feats_fake), pose_rows(fake_poses));

  const Discriminator& d = discriminator_;
  const Critic critic = [&d](const Tensor& img, const Tensor& e) {
    return d.match_logit(d.features(img), e);
  };
  std::vector<Tensor> e_real_rows;
  for (const auto& e : e_real) e_real_rows.push_back(row_tensor(e));
  const LossWeights weights = config_.effective_loss();
  const Tensor penalty =
      weights.penalty_scale > 0.0
          ? matching_gradient_penalty(critic, real, e_real_rows, weights.penalty_scale,
                                      weights.penalty_exponent)
          : Tensor::scalar(0.0);
  const Tensor adversarial =
      adversarial_loss_discriminator(logits_real, logits_mismatch, logits_fake, Tensor());
  const Tensor loss = add(add(adversarial, penalty), reconstruction);

  DiscriminatorStepStats stats;
  stats.loss = loss.item();
  stats.adversarial = adversarial.item();
  stats.penalty = penalty.item();
  stats.pose_reconstruction = reconstruction.item();
  require_finite(stats.loss, "discriminator loss", step_);
  std::size_t correct = 0;
  for (double v : logits_real.data()) correct += v > 0.0 ? 1 : 0;
  for (double v : logits_fake.data()) correct += v < 0.0 ? 1 : 0;
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(2 * b);

  const auto grads = grad(loss, adam_d_.params());
  adam_d_.step(grads);
  return stats;
}

GeneratorStepStats Trainer::generator_step(const GeneratorStepOptions& options) {
  PrecisionScope precision(config_.precision);
  const auto& latent = config_.generator.latent;
  const auto batch = sample_batch();
  // B generated images per step, as ceil(B/2) pairs sharing pose and condition.
  const std::size_t b = (batch.size() + 1) / 2;

  std::vector<Tensor> first, second;
  std::vector<std::vector<double>> e_first, e_second;
  for (std::size_t i = 0; i < b; ++i) {
    const CameraPose pose = sample_pose(config_.prior, rng_);
    const RaySamples rays = generator_.sample_rays(pose, rng_);
    const NoiseCodes z1 = sample_noise(latent.shape, latent.appearance, rng_);
    const NoiseCodes z2 =
        options.identical_noise ? z1 : sample_noise(latent.shape, latent.appearance, rng_);
    const GlobalFeature& c = conditions_[batch[i]];
    first.push_back(generator_.render(rays, LatentRows::from(c, z1)));
    second.push_back(generator_.render(rays, LatentRows::from(c, z2)));
    e_first.push_back(matching_row(batch[i], z1));
    e_second.push_back(matching_row(batch[i], z2));
  }

  const Tensor feats_first = discriminator_.features(first);
  const Tensor feats_second = discriminator_.features(second);
  const Tensor logits = concat({discriminator_.match_logit(feats_first, stack_rows(e_first)),
                                discriminator_.match_logit(feats_second, stack_rows(e_second))},
                               0);
  const Tensor adversarial = adversarial_loss_generator(logits);
  std::vector<Tensor> diffs;
  for (std::size_t i = 0; i < b; ++i) diffs.push_back(diversity_loss(first[i], second[i]));
  const Tensor diversity = scale(sum(concat(diffs, 0)), 1.0 / static_cast<double>(b));
  const Tensor pose = pose_penalty(discriminator_.estimate_pose(feats_first),
                                   discriminator_.estimate_pose(feats_second));
  const Tensor loss = total_generator_loss(adversarial, diversity, pose, config_.effective_loss());

  GeneratorStepStats stats;
  stats.loss = loss.item();
  stats.adversarial = adversarial.item();
  stats.diversity = diversity.item();
  stats.pose_penalty = pose.item();
  require_finite(stats.loss, "generator loss", step_);

  const auto grads = grad(loss, adam_g_.params());
  adam_g_.step(grads);
  return stats;
}

MetricsRow Trainer::train_step(bool with_metrics) {
  const DiscriminatorStepStats d = discriminator_step();
  const GeneratorStepStats g = generator_step();
  ++step_;
  MetricsRow row;
  row.step = step_;
  row.loss_d = d.loss;
  row.loss_g = g.loss;
  row.l_div = g.diversity;
  row.l_pose = g.pose_penalty;
  if (with_metrics) fill_metrics(row);
  return row;
}

void Trainer::fill_metrics(MetricsRow& row) const {
  PrecisionScope precision(config_.precision);
  std::mt19937_64 rng(derive_seed(config_.seed, 1000 + static_cast<std::uint64_t>(row.step)));
  const DiscriminatorPoseEstimator estimator(discriminator_);
  const PoseSpread spread = pose_consistency_std(generator_, estimator, canonical_pose(),
                                                 conditions_.front(), config_.metric_samples, rng);
  row.pose_std_r = spread.rotation;
  row.pose_std_e = spread.elevation;
  row.diversity =
      diversity_score(generator_, conditions_.front(), canonical_pose(), config_.metric_samples, rng);
}

DiscriminatorEvaluation Trainer::evaluate_discriminator(std::int64_t batches,
                                                        std::uint64_t seed) const {
  PrecisionScope precision(config_.precision);
  NoGradScope no_grad;
  std::mt19937_64 rng(seed);
  const auto& latent = config_.generator.latent;
  std::uniform_int_distribution<std::size_t> pick(0, dataset_.size() - 1);
  std::size_t correct = 0, total = 0, angles = 0;
  double error = 0.0;
  for (std::int64_t k = 0; k < batches * config_.batch_size; ++k) {
    const std::size_t idx = pick(rng);
    const NoiseCodes z_real = sample_noise(latent.shape, latent.appearance, rng);
    const Tensor real_logit = discriminator_.match_logit(
        discriminator_.features(image_to_tensor(dataset_[idx].image)),
        row_tensor(matching_row(idx, z_real)));
    const CameraPose pose = sample_pose(config_.prior, rng);
    const NoiseCodes z = sample_noise(latent.shape, latent.appearance, rng);
    const Tensor img = generator_.generate(pose, conditions_[idx], z, rng);
    const Tensor feats = discriminator_.features(img);
    const Tensor fake_logit = discriminator_.match_logit(feats, row_tensor(matching_row(idx, z)));
    correct += (real_logit.item() > 0.0 ? 1 : 0) + (fake_logit.item() < 0.0 ? 1 : 0);
    total += 2;
    const Tensor p = discriminator_.estimate_pose(feats);
    error += std::abs(canonical_angle(p[0] - pose.rotation));
    error += std::abs(canonical_angle(p[1] - pose.elevation));
    angles += 2;
  }
  return {static_cast<double>(correct) / static_cast<double>(total),
          error / static_cast<double>(angles)};
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config = format_config(config_);
  c.step = step_;
  std::ostringstream rng_text;
  rng_text << rng_;
  c.rng_state = rng_text.str();
  c.add_all("generator/", generator_.parameters());
  c.add_all("discriminator/", discriminator_.parameters());
  const auto add_moments = [&c](const std::string& prefix, const ParameterSet& set,
                                const Adam& adam) {
    const auto& m = adam.moments();
    for (std::size_t i = 0; i < set.size(); ++i) {
      c.add(prefix + "m/" + set.entries()[i].first, m.first[i]);
      c.add(prefix + "v/" + set.entries()[i].first, m.second[i]);
    }
    c.add(prefix + "step", Tensor::scalar(static_cast<double>(m.step)));
  };
  add_moments("adam_g/", generator_.parameters(), adam_g_);
  add_moments("adam_d/", discriminator_.parameters(), adam_d_);
  return c;
}

void Trainer::restore(const Checkpoint& checkpoint) {
  checkpoint.restore_all("generator/", generator_.parameters());
  checkpoint.restore_all("discriminator/", discriminator_.parameters());
  const auto restore_moments = [&checkpoint](const std::string& prefix, const ParameterSet& set,
                                             Adam& adam) {
    auto& m = adam.moments();
    for (std::size_t i = 0; i < set.size(); ++i) {
      checkpoint.restore(prefix + "m/" + set.entries()[i].first, m.first[i]);
      checkpoint.restore(prefix + "v/" + set.entries()[i].first, m.second[i]);
    }
    m.step = static_cast<std::int64_t>(checkpoint.find(prefix + "step").values.at(0));
  };
  restore_moments("adam_g/", generator_.parameters(), adam_g_);
  restore_moments("adam_d/", discriminator_.parameters(), adam_d_);
  std::istringstream rng_text(checkpoint.rng_state);
  rng_text >> rng_;
  if (!rng_text) throw CheckpointError("checkpoint RNG state is malformed");
  step_ = checkpoint.step;
}

TrainOutputs train_loop(const TrainConfig& config, const std::filesystem::path& out_dir,
                        const Checkpoint* resume,
                        const std::function<void(const MetricsRow&)>& on_row) {
  Trainer trainer(config);
  if (resume != nullptr) trainer.restore(*resume);
  std::filesystem::create_directories(out_dir);
  const auto log_path = out_dir / "metrics.csv";
  const auto ckpt_path = out_dir / "checkpoint.bin";

  std::vector<std::string> lines;
  if (resume != nullptr && std::filesystem::exists(log_path)) {
    std::istringstream in(read_file(log_path));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) <= trainer.step()) lines.push_back(line);
    }
  }
  const auto write_log = [&] {
    std::string text = metrics_header() + "\n";
    for (const auto& l : lines) text += l + "\n";
    write_file_atomic(log_path, text);
  };

  TrainOutputs out;
  out.checkpoint_path = ckpt_path;
  while (trainer.step() < config.steps) {
    const std::int64_t next = trainer.step() + 1;
    const bool log = next % config.log_every == 0 || next == config.steps;
    const MetricsRow row = trainer.train_step(log);
    if (log) {
      out.log.push_back(row);
      lines.push_back(format_metrics_row(row));
      if (on_row) on_row(row);
    }
    if (config.checkpoint_every > 0 && trainer.step() % config.checkpoint_every == 0) {
      save_checkpoint(ckpt_path, trainer.checkpoint());
      write_log();
    }
  }
  save_checkpoint(ckpt_path, trainer.checkpoint());
  write_log();
  return out;
}

}  // namespace cgnerf
