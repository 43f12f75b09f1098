// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// cgnerf train | render | eval

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cgnerf/checkpoint.hpp"
#include "cgnerf/config.hpp"
#include "cgnerf/image.hpp"
#include "cgnerf/metrics.hpp"
#include "cgnerf/trainer.hpp"

namespace {

using namespace cgnerf;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::vector<std::string> checkpoints;
  std::string condition = "color";
  std::string text;
  std::int64_t views = 5;
  bool zero_noise = false;
};

TrainConfig config_from_checkpoint(const Checkpoint& ckpt) { return parse_config(ckpt.config); }

int run_train(const Options& opt) {
  TrainConfig config = opt.config_path.empty() ? TrainConfig{} : load_config(opt.config_path);
  if (opt.seed) config.seed = *opt.seed;
  config.validate();
  std::optional<Checkpoint> resume;
  if (!opt.checkpoints.empty()) resume = load_checkpoint(opt.checkpoints.front());
  std::cout << metrics_header() << "\n";
  const auto out = train_loop(config, opt.out_dir, resume ? &*resume : nullptr,
                              [](const MetricsRow& row) {
                                std::cout << format_metrics_row(row) << std::endl;
                              });
  std::cout << "checkpoint: " << out.checkpoint_path.string() << "\n";
  return 0;
}

GlobalFeature pick_condition(const Trainer& trainer, const Options& opt) {
  const ConditionKind kind = parse_condition_kind(opt.condition);
  if (kind == ConditionKind::kText) {
    const std::string text = opt.text.empty() ? trainer.dataset().front().text : opt.text;
    return trainer.encoder().encode(ConditionInput::from_text(text));
  }
  if (!opt.text.empty()) throw CLI::ValidationError("--text", "only valid with --condition text");
  return trainer.encoder().encode(trainer.dataset().front().condition(kind));
}

int run_render(const Options& opt) {
  if (opt.checkpoints.size() != 1) throw CLI::ValidationError("--checkpoint", "render needs exactly one");
  if (opt.views < 1) throw CLI::ValidationError("--views", "must be >= 1");
  const Checkpoint ckpt = load_checkpoint(opt.checkpoints.front());
  TrainConfig config = config_from_checkpoint(ckpt);
  Trainer trainer(config);
  trainer.restore(ckpt);
  const Generator& g = trainer.generator();
  const GlobalFeature c = pick_condition(trainer, opt);
  const std::uint64_t seed = opt.seed.value_or(config.seed);
  std::mt19937_64 noise_rng(derive_seed(seed, 20));
  const auto& latent = config.generator.latent;
  const NoiseCodes z = opt.zero_noise ? NoiseCodes::zeros(latent.shape, latent.appearance)
                                      : sample_noise(latent.shape, latent.appearance, noise_rng);

  PrecisionScope precision(config.precision);
  NoGradScope no_grad;
  std::vector<Image> frames;
  for (std::int64_t v = 0; v < opt.views; ++v) {
    const double t = opt.views == 1 ? 0.5 : static_cast<double>(v) / static_cast<double>(opt.views - 1);
    const double rotation = config.prior.rotation_min + t * (config.prior.rotation_max - config.prior.rotation_min);
    std::mt19937_64 ray_rng(derive_seed(seed, 21));
    frames.push_back(tensor_to_image(g.generate(make_pose(rotation, std::numbers::pi / 2), c, z, ray_rng)));
  }
  std::filesystem::create_directories(opt.out_dir);
  const auto strip = std::filesystem::path(opt.out_dir) / "strip.png";
  write_png(strip, hstack(frames));
  std::cout << "wrote " << strip.string() << "\n";
  if (opt.zero_noise) {
    std::mt19937_64 ray_rng(derive_seed(seed, 21));
    const auto avg = std::filesystem::path(opt.out_dir) / "average.png";
    write_png(avg, tensor_to_image(g.generate(canonical_pose(), c, z, ray_rng)));
    std::cout << "wrote " << avg.string() << "\n";
  }
  return 0;
}

int run_eval(const Options& opt) {
  if (opt.checkpoints.empty()) throw CLI::ValidationError("--checkpoint", "eval needs at least one");
  std::vector<Checkpoint> ckpts;
  for (const auto& p : opt.checkpoints) ckpts.push_back(load_checkpoint(p));
  const TrainConfig base = config_from_checkpoint(ckpts.front());
  const std::uint64_t seed = opt.seed.value_or(base.seed);

  // Pose oracle on a fresh synthetic set with the checkpoint's geometry.
  DatasetOptions data = base.dataset();
  data.scenes = 32;
  std::mt19937_64 data_rng(derive_seed(seed, 30));
  const auto records = make_dataset(data, data_rng);
  PoseOracleOptions oracle_options;
  oracle_options.seed = derive_seed(seed, 31);
  PoseOracleReport report;
  const PoseOracle oracle = train_pose_oracle(records, oracle_options, &report);
  std::cout << "pose oracle final loss " << report.final_loss << "\n\n";

  std::printf("%-40s %-12s %-12s %-12s %-12s\n", "checkpoint", "pose_penalty", "pose_std_r",
              "pose_std_e", "diversity");
  for (std::size_t i = 0; i < ckpts.size(); ++i) {
    const TrainConfig config = config_from_checkpoint(ckpts[i]);
    Trainer trainer(config);
    trainer.restore(ckpts[i]);
    PrecisionScope precision(config.precision);
    std::vector<GlobalFeature> conditions;
    for (std::int64_t s = 0; s < std::min<std::int64_t>(4, config.scenes); ++s) {
      conditions.push_back(trainer.conditions()[static_cast<std::size_t>(s * config.views_per_scene)]);
    }
    const GeneratorMetrics m =
        evaluate_generator(trainer.generator(), oracle, conditions, 8, derive_seed(seed, 32));
    std::printf("%-40s %-12s %-12.6f %-12.6f %-12.6f\n", opt.checkpoints[i].c_str(),
                config.enable_pose_penalty ? "on" : "off", m.pose_std_rotation,
                m.pose_std_elevation, m.diversity);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  cgnerf::tune_allocator();
  CLI::App app{"Conditional generative radiance fields: train, render, evaluate"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "key=value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "random seed override");
    sub->add_option("--out", opt.out_dir, "output directory");
  };

  auto* train = app.add_subcommand("train", "run the alternating GAN training loop");
  add_common(train);
  train->add_option("--checkpoint", opt.checkpoints, "resume from this checkpoint")
      ->check(CLI::ExistingFile)->expected(0, 1);

  auto* render = app.add_subcommand("render", "render a horizontal rotation strip");
  add_common(render);
  render->add_option("--checkpoint", opt.checkpoints, "trained checkpoint")
      ->check(CLI::ExistingFile)->required()->expected(1);
  render->add_option("--condition", opt.condition, "color | gray | sketch | lowres | text")
      ->check(CLI::IsMember({"color", "gray", "sketch", "lowres", "text"}));
  render->add_option("--text", opt.text, "text condition (with --condition text)");
  render->add_option("--views", opt.views, "number of rotation steps");
  render->add_flag("--zero-noise", opt.zero_noise, "use all-zero noise codes and also write average.png");

  auto* eval = app.add_subcommand("eval", "compare pose dispersion and diversity across checkpoints");
  add_common(eval);
  eval->add_option("--checkpoint", opt.checkpoints, "checkpoint (repeatable)")
      ->check(CLI::ExistingFile)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (train->parsed()) return run_train(opt);
    if (render->parsed()) return run_render(opt);
    if (eval->parsed()) return run_eval(opt);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
