// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Conditional feature-field generator.
//
//   (c, z_s) --mapping--> FiLM params --> shape block (x)          --> density
//   (c, z_a) --mapping--> FiLM params --> appearance block (h, d)  --> features
//   features along each ray --volume render--> feature map --decoder--> RGB
//
// Layer widths: every sine layer is `hidden` wide except the last shape
// layer and the N^a-th appearance layer, which emit L_f. The final
// appearance layer consumes [h | d] (L_f + 2) and a linear feature head maps
// its output to L_f. Density is softplus of a linear head on the shape-block
// output, so it never depends on the view direction or the appearance code.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cgnerf/camera.hpp"
#include "cgnerf/condition.hpp"
#include "cgnerf/nn.hpp"
#include "cgnerf/tensor.hpp"

namespace cgnerf {

struct GeneratorConfig {
  LatentDims latent;
  std::int64_t feature_dim = 32;  // L_f
  std::int64_t hidden = 64;
  std::int64_t shape_layers = 4;       // N^s
  std::int64_t appearance_layers = 2;  // N^a
  std::int64_t mapping_hidden = 64;
  std::int64_t mapping_depth = 2;
  std::int64_t feature_height = 16;  // H_V
  std::int64_t feature_width = 16;   // W_V
  std::int64_t image_height = 64;
  std::int64_t image_width = 64;
  std::int64_t samples = 12;  // J
  double fov = 0.6;
  double near = 0.5;
  double far = 1.5;
  double frequency_scale = 15.0;
  double frequency_offset = 30.0;

  void validate() const;
  /// Number of x2 decoder stages, log2(H / H_V).
  std::int64_t decoder_stages() const;
  std::vector<std::int64_t> shape_widths() const;
  /// N^a + 1 widths; the last one is the final (view-conditioned) layer.
  std::vector<std::int64_t> appearance_widths() const;
};

/// Per-layer modulation: gamma[i] and beta[i] have the i-th layer's width.
struct FilmParams {
  std::vector<Tensor> gamma;
  std::vector<Tensor> beta;
  std::size_t size() const { return gamma.size(); }
};

/// sin(gamma * (y W^T + b) + beta) for y [P x M], W [N x M], b/gamma/beta [N].
Tensor film_siren_layer(const Tensor& y, const Tensor& w, const Tensor& b, const Tensor& gamma,
                        const Tensor& beta);

/// Compositing weights T_j * alpha_j for sigma, deltas [R x J]; result [R x J].
Tensor compositing_weights(const Tensor& sigma, const Tensor& deltas);
/// sum_j w_j f_j for features [R x J x L]; result [R x L]. Negative deltas
/// are rejected.
Tensor volume_render(const Tensor& sigma, const Tensor& deltas, const Tensor& features);

struct FieldOutput {
  Tensor sigma;     // [P x 1]
  Tensor features;  // [P x L_f]
};

/// Latents as [1 x L] row tensors.
struct LatentRows {
  Tensor condition;
  Tensor shape;
  Tensor appearance;
  static LatentRows from(const GlobalFeature& c, const NoiseCodes& z);
};

class Generator {
 public:
  Generator(GeneratorConfig config, std::uint64_t seed);

  const GeneratorConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  FilmParams map_shape(const Tensor& condition, const Tensor& shape_code) const;
  FilmParams map_appearance(const Tensor& condition, const Tensor& appearance_code) const;

  /// x [P x 3] -> [P x L_f].
  Tensor shape_block(const Tensor& x, const FilmParams& film) const;
  /// h [P x L_f], d [P x 2] -> [P x hidden] (before the feature head).
  Tensor appearance_block(const Tensor& h, const Tensor& d, const FilmParams& film) const;
  /// x [P x 3], d [P x 2].
  FieldOutput feature_fields(const Tensor& x, const Tensor& d, const LatentRows& latent) const;

  /// [L_f x H_V x W_V] -> [3 x H x W] in [0, 1].
  Tensor decode(const Tensor& feature_map) const;
  /// Feature map [L_f x H_V x W_V] rendered from precomputed samples.
  Tensor render_features(const RaySamples& samples, const LatentRows& latent) const;
  /// Image [3 x H x W] from precomputed ray samples.
  Tensor render(const RaySamples& samples, const LatentRows& latent) const;

  /// Draws stratified depths for `pose` from `rng`.
  RaySamples sample_rays(const CameraPose& pose, std::mt19937_64& rng) const;
  Tensor generate(const CameraPose& pose, const GlobalFeature& c, const NoiseCodes& z,
                  std::mt19937_64& rng) const;

  struct Linear {
    Tensor weight;
    Tensor bias;
  };
  const std::vector<Linear>& shape_layers() const { return shape_layers_; }
  const std::vector<Linear>& appearance_layers() const { return appearance_layers_; }
  const std::vector<Linear>& shape_mapping() const { return shape_mapping_; }
  const std::vector<Linear>& appearance_mapping() const { return appearance_mapping_; }
  const Linear& density_head() const { return density_head_; }
  const Linear& feature_head() const { return feature_head_; }

 private:
  FilmParams run_mapping(const std::vector<Linear>& net, const Tensor& input,
                         const std::vector<std::int64_t>& widths) const;

  GeneratorConfig config_;
  ParameterSet params_;
  std::vector<Linear> shape_mapping_;
  std::vector<Linear> appearance_mapping_;
  std::vector<Linear> shape_layers_;
  std::vector<Linear> appearance_layers_;
  Linear density_head_;
  Linear feature_head_;
  std::vector<Linear> decoder_;  // conv weights [O x C x k x k]
};

}  // namespace cgnerf
