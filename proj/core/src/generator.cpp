// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cgnerf/ops.hpp"

namespace cgnerf {
namespace {

bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

void require_positive(std::int64_t v, const char* what) {
  if (v < 1) throw std::invalid_argument(std::string(what) + " must be positive");
}

std::int64_t total_film_width(const std::vector<std::int64_t>& widths) {
  std::int64_t n = 0;
  for (auto w : widths) n += 2 * w;
  return n;
}

}  // namespace

void GeneratorConfig::validate() const {
  require_positive(latent.condition, "condition dim");
  require_positive(latent.shape, "shape code dim");
  require_positive(latent.appearance, "appearance code dim");
  require_positive(feature_dim, "feature dim");
  require_positive(hidden, "hidden width");
  require_positive(shape_layers, "shape layer count");
  require_positive(appearance_layers, "appearance layer count");
  require_positive(mapping_hidden, "mapping width");
  if (mapping_depth < 0) throw std::invalid_argument("mapping depth must be >= 0");
  require_positive(feature_height, "feature height");
  require_positive(feature_width, "feature width");
  require_positive(samples, "samples per ray");
  if (!(fov > 0.0 && fov < std::numbers::pi)) throw std::invalid_argument("fov must lie in (0, pi)");
  if (!(near > 0.0 && near < far)) throw std::invalid_argument("need 0 < near < far");
  (void)decoder_stages();
}

std::int64_t GeneratorConfig::decoder_stages() const {
  if (image_height % feature_height != 0 || image_width % feature_width != 0) {
    throw std::invalid_argument("image size must be a multiple of the feature grid");
  }
  const std::int64_t ry = image_height / feature_height;
  const std::int64_t rx = image_width / feature_width;
  if (ry != rx || !is_power_of_two(ry)) {
    throw std::invalid_argument("image/feature ratio must be the same power of two on both axes");
  }
  std::int64_t n = 0;
  for (std::int64_t r = ry; r > 1; r >>= 1) ++n;
  return n;
}

std::vector<std::int64_t> GeneratorConfig::shape_widths() const {
  std::vector<std::int64_t> w(static_cast<std::size_t>(shape_layers), hidden);
  w.back() = feature_dim;
  return w;
}

std::vector<std::int64_t> GeneratorConfig::appearance_widths() const {
  std::vector<std::int64_t> w(static_cast<std::size_t>(appearance_layers + 1), hidden);
  w[static_cast<std::size_t>(appearance_layers - 1)] = feature_dim;
  return w;
}

Tensor film_siren_layer(const Tensor& y, const Tensor& w, const Tensor& b, const Tensor& gamma,
                        const Tensor& beta) {
  const std::int64_t n = w.ndim() == 2 ? w.dim(0) : -1;
  if (y.ndim() != 2 || n < 0 || y.dim(1) != w.dim(1)) {
    throw ShapeError("film_siren_layer: input " + shape_string(y.shape()) + " vs weight " +
                     shape_string(w.shape()));
  }
  const Shape vec{n};
  if (gamma.shape() != vec || beta.shape() != vec || (b.defined() && b.shape() != vec)) {
    throw ShapeError("film_siren_layer: gamma/beta/bias must have shape " + shape_string(vec));
  }
  return modulated_sin(linear(y, w, b), gamma, beta);
}

Tensor compositing_weights(const Tensor& sigma, const Tensor& deltas) {
  if (sigma.ndim() != 2 || sigma.shape() != deltas.shape()) {
    throw ShapeError("compositing_weights: sigma " + shape_string(sigma.shape()) + " vs deltas " +
                     shape_string(deltas.shape()));
  }
  for (double d : deltas.data()) {
    if (!(d >= 0.0)) throw std::invalid_argument("volume rendering needs non-negative deltas");
  }
  const Tensor optical = mul(sigma, deltas);
  const Tensor alpha = add_scalar(neg(exp(neg(optical))), 1.0);
  const Tensor transmittance = exp(neg(cumsum_exclusive(optical, 1)));
  return mul(transmittance, alpha);
}

Tensor volume_render(const Tensor& sigma, const Tensor& deltas, const Tensor& features) {
  if (features.ndim() != 3 || features.dim(0) != sigma.dim(0) || features.dim(1) != sigma.dim(1)) {
    throw ShapeError("volume_render: features " + shape_string(features.shape()) +
                     " do not match sigma " + shape_string(sigma.shape()));
  }
  const Tensor w = compositing_weights(sigma, deltas);
  const Tensor w3 = reshape(w, {w.dim(0), w.dim(1), 1});
  return sum_axis(mul(features, w3), 1);
}

LatentRows LatentRows::from(const GlobalFeature& c, const NoiseCodes& z) {
  return LatentRows{row_tensor(c.values), row_tensor(z.shape), row_tensor(z.appearance)};
}

Generator::Generator(GeneratorConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const auto& cfg = config_;

  auto add_linear = [&](const std::string& name, Tensor weight, std::int64_t out) {
    Linear l;
    l.weight = params_.add(name + ".weight", std::move(weight));
    l.bias = params_.add(name + ".bias", Tensor::zeros({out}));
    return l;
  };
  auto build_mapping = [&](const std::string& prefix, std::int64_t in,
                           const std::vector<std::int64_t>& widths) {
    std::vector<Linear> net;
    std::int64_t width = in;
    for (std::int64_t i = 0; i < cfg.mapping_depth; ++i) {
      net.push_back(add_linear(prefix + ".hidden" + std::to_string(i),
                               he_uniform({cfg.mapping_hidden, width}, width, rng),
                               cfg.mapping_hidden));
      width = cfg.mapping_hidden;
    }
    const std::int64_t out = total_film_width(widths);
    net.push_back(add_linear(prefix + ".head", he_uniform({out, width}, width, rng, 0.25), out));
    return net;
  };

  shape_mapping_ = build_mapping("mapping_shape", cfg.latent.condition + cfg.latent.shape,
                                 cfg.shape_widths());
  appearance_mapping_ = build_mapping("mapping_appearance",
                                      cfg.latent.condition + cfg.latent.appearance,
                                      cfg.appearance_widths());

  std::int64_t in = 3;
  const auto sw = cfg.shape_widths();
  for (std::size_t i = 0; i < sw.size(); ++i) {
    Tensor w = i == 0 ? siren_first_init(sw[i], in, rng) : siren_hidden_init(sw[i], in, rng);
    Linear l;
    l.weight = params_.add("shape." + std::to_string(i) + ".weight", std::move(w));
    l.bias = params_.add("shape." + std::to_string(i) + ".bias",
                         uniform_tensor({sw[i]}, 1.0 / std::sqrt(static_cast<double>(in)), rng));
    shape_layers_.push_back(l);
    in = sw[i];
  }

  const auto aw = cfg.appearance_widths();
  in = cfg.feature_dim;
  for (std::size_t i = 0; i < aw.size(); ++i) {
    if (i + 1 == aw.size()) in += 2;
    Linear l;
    l.weight = params_.add("appearance." + std::to_string(i) + ".weight",
                           siren_hidden_init(aw[i], in, rng));
    l.bias = params_.add("appearance." + std::to_string(i) + ".bias",
                         uniform_tensor({aw[i]}, 1.0 / std::sqrt(static_cast<double>(in)), rng));
    appearance_layers_.push_back(l);
    in = aw[i];
  }

  density_head_ = add_linear("density_head",
                             siren_hidden_init(1, cfg.feature_dim, rng), 1);
  feature_head_ = add_linear("feature_head", siren_hidden_init(cfg.feature_dim, cfg.hidden, rng),
                             cfg.feature_dim);

  const std::int64_t ch = cfg.feature_dim;
  for (std::int64_t s = 0; s < cfg.decoder_stages(); ++s) {
    Linear conv;
    conv.weight = params_.add("decoder." + std::to_string(s) + ".weight",
                              he_uniform({ch, ch, 3, 3}, ch * 9, rng));
    conv.bias = params_.add("decoder." + std::to_string(s) + ".bias", Tensor::zeros({ch}));
    decoder_.push_back(conv);
  }
  Linear to_rgb;
  to_rgb.weight = params_.add("decoder.rgb.weight", he_uniform({3, ch, 1, 1}, ch, rng));
  to_rgb.bias = params_.add("decoder.rgb.bias", Tensor::zeros({3}));
  decoder_.push_back(to_rgb);
}

FilmParams Generator::run_mapping(const std::vector<Linear>& net, const Tensor& input,
                                  const std::vector<std::int64_t>& widths) const {
  Tensor h = input;
  for (std::size_t i = 0; i + 1 < net.size(); ++i) h = relu(linear(h, net[i].weight, net[i].bias));
  const Tensor raw = linear(h, net.back().weight, net.back().bias);
  FilmParams film;
  std::int64_t offset = 0;
  for (auto w : widths) {
    const Tensor g = reshape(slice(raw, 1, offset, w), {w});
    const Tensor b = reshape(slice(raw, 1, offset + w, w), {w});
    film.gamma.push_back(add_scalar(scale(g, config_.frequency_scale), config_.frequency_offset));
    film.beta.push_back(b);
    offset += 2 * w;
  }
  return film;
}

FilmParams Generator::map_shape(const Tensor& condition, const Tensor& shape_code) const {
  const Shape c{1, config_.latent.condition}, z{1, config_.latent.shape};
  if (condition.shape() != c || shape_code.shape() != z) {
    throw ShapeError("map_shape: got " + shape_string(condition.shape()) + " and " +
                     shape_string(shape_code.shape()) + ", expected " + shape_string(c) + " and " +
                     shape_string(z));
  }
  return run_mapping(shape_mapping_, concat({condition, shape_code}, 1), config_.shape_widths());
}

FilmParams Generator::map_appearance(const Tensor& condition, const Tensor& appearance_code) const {
  const Shape c{1, config_.latent.condition}, z{1, config_.latent.appearance};
  if (condition.shape() != c || appearance_code.shape() != z) {
    throw ShapeError("map_appearance: got " + shape_string(condition.shape()) + " and " +
                     shape_string(appearance_code.shape()) + ", expected " + shape_string(c) +
                     " and " + shape_string(z));
  }
  return run_mapping(appearance_mapping_, concat({condition, appearance_code}, 1),
                     config_.appearance_widths());
}

Tensor Generator::shape_block(const Tensor& x, const FilmParams& film) const {
  if (film.size() != shape_layers_.size()) {
    throw ShapeError("shape block expects " + std::to_string(shape_layers_.size()) +
                     " FiLM pairs, got " + std::to_string(film.size()));
  }
  Tensor h = x;
  for (std::size_t i = 0; i < shape_layers_.size(); ++i) {
    h = film_siren_layer(h, shape_layers_[i].weight, shape_layers_[i].bias, film.gamma[i],
                         film.beta[i]);
  }
  return h;
}

Tensor Generator::appearance_block(const Tensor& h, const Tensor& d, const FilmParams& film) const {
  if (film.size() != appearance_layers_.size()) {
    throw ShapeError("appearance block expects " + std::to_string(appearance_layers_.size()) +
                     " FiLM pairs, got " + std::to_string(film.size()));
  }
  if (d.ndim() != 2 || d.dim(1) != 2 || d.dim(0) != h.dim(0)) {
    throw ShapeError("appearance block: direction " + shape_string(d.shape()) + " vs features " +
                     shape_string(h.shape()));
  }
  Tensor a = h;
  const std::size_t last = appearance_layers_.size() - 1;
  for (std::size_t i = 0; i < appearance_layers_.size(); ++i) {
    if (i == last) a = concat({a, d}, 1);
    a = film_siren_layer(a, appearance_layers_[i].weight, appearance_layers_[i].bias,
                         film.gamma[i], film.beta[i]);
  }
  return a;
}

FieldOutput Generator::feature_fields(const Tensor& x, const Tensor& d,
                                      const LatentRows& latent) const {
  if (x.ndim() != 2 || x.dim(1) != 3) throw ShapeError("feature_fields: x must be [P x 3]");
  const FilmParams shape_film = map_shape(latent.condition, latent.shape);
  const FilmParams appearance_film = map_appearance(latent.condition, latent.appearance);
  const Tensor h = shape_block(x, shape_film);
  FieldOutput out;
  out.sigma = softplus(linear(h, density_head_.weight, density_head_.bias));
  const Tensor a = appearance_block(h, d, appearance_film);
  out.features = linear(a, feature_head_.weight, feature_head_.bias);
  return out;
}

Tensor Generator::decode(const Tensor& feature_map) const {
  const Shape expected{config_.feature_dim, config_.feature_height, config_.feature_width};
  if (feature_map.shape() != expected) {
    throw ShapeError("decode: got " + shape_string(feature_map.shape()) + ", expected " +
                     shape_string(expected));
  }
  Tensor h = feature_map;
  for (std::size_t s = 0; s + 1 < decoder_.size(); ++s) {
    h = leaky_relu(conv2d(upsample_nearest(h, 2), decoder_[s].weight, decoder_[s].bias, 1, 1));
  }
  return sigmoid(conv2d(h, decoder_.back().weight, decoder_.back().bias, 1, 0));
}

Tensor Generator::render_features(const RaySamples& samples, const LatentRows& latent) const {
  const std::int64_t rays = config_.feature_height * config_.feature_width;
  if (samples.rays != rays || samples.samples != config_.samples) {
    throw ShapeError("render: ray samples (" + std::to_string(samples.rays) + " x " +
                     std::to_string(samples.samples) + ") do not match the configured grid");
  }
  const std::int64_t j = samples.samples;
  const Tensor x(Shape{rays * j, 3}, samples.points);
  const Tensor d_ray(Shape{rays, 2}, samples.angles);
  const Tensor d = reshape(broadcast_axis(d_ray, 1, j), {rays * j, 2});
  const FieldOutput field = feature_fields(x, d, latent);
  const Tensor deltas(Shape{rays, j}, samples.deltas);
  const Tensor rendered = volume_render(reshape(field.sigma, {rays, j}), deltas,
                                        reshape(field.features, {rays, j, config_.feature_dim}));
  return reshape(transpose(rendered),
                 {config_.feature_dim, config_.feature_height, config_.feature_width});
}

Tensor Generator::render(const RaySamples& samples, const LatentRows& latent) const {
  return decode(render_features(samples, latent));
}

RaySamples Generator::sample_rays(const CameraPose& pose, std::mt19937_64& rng) const {
  const RayBundle rays = generate_rays(pose, config_.fov, config_.feature_height,
                                       config_.feature_width, config_.near, config_.far);
  return stratified_sample(rays, config_.samples, rng);
}

Tensor Generator::generate(const CameraPose& pose, const GlobalFeature& c, const NoiseCodes& z,
                           std::mt19937_64& rng) const {
  return render(sample_rays(pose, rng), LatentRows::from(c, z));
}

}  // namespace cgnerf
