// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace cgnerf {

void AdamOptions::validate() const {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
}

AdamMoments AdamMoments::zeros_like(std::span<const Tensor> params) {
  AdamMoments m;
  for (const auto& p : params) {
    m.first.push_back(Tensor::zeros(p.shape()));
    m.second.push_back(Tensor::zeros(p.shape()));
  }
  return m;
}

void adam_step(std::span<const Tensor> params, std::span<const Tensor> grads, AdamMoments& moments,
               const AdamOptions& options) {
  if (params.size() != grads.size() || params.size() != moments.first.size() ||
      params.size() != moments.second.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].shape() || moments.first[i].shape() != params[i].shape() ||
        moments.second[i].shape() != params[i].shape()) {
      throw ShapeError("adam_step: gradient " + shape_string(grads[i].shape()) +
                       " does not match parameter " + shape_string(params[i].shape()));
    }
  }
  moments.step += 1;
  const double t = static_cast<double>(moments.step);
  const double c1 = 1.0 - std::pow(options.beta1, t);
  const double c2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    Tensor m = moments.first[i];
    Tensor v = moments.second[i];
    auto pd = p.mutable_data();
    auto md = m.mutable_data();
    auto vd = v.mutable_data();
    const auto gd = grads[i].data();
    for (std::size_t k = 0; k < pd.size(); ++k) {
      const double g = gd[k];
      md[k] = options.beta1 * md[k] + (1.0 - options.beta1) * g;
      vd[k] = options.beta2 * vd[k] + (1.0 - options.beta2) * g * g;
      pd[k] -= options.learning_rate * (md[k] / c1) / (std::sqrt(vd[k] / c2) + options.epsilon);
    }
  }
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options), moments_(AdamMoments::zeros_like(params_)) {
  options_.validate();
}

void Adam::step(std::span<const Tensor> grads) { adam_step(params_, grads, moments_, options_); }

}  // namespace cgnerf
