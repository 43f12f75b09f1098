// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "cgnerf/ops.hpp"

namespace cgnerf {
namespace {

Tensor cosine_residual(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape() || a.ndim() != 2 || a.dim(1) != 2) {
    throw ShapeError(std::string(op) + ": pose shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + ", expected matching [N x 2]");
  }
  return mean(add_scalar(neg(cos(sub(a, b))), 1.0));
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_div >= 0.0) || !(lambda_pose >= 0.0) || !(penalty_scale >= 0.0)) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  if (!(penalty_exponent >= 1.0)) throw std::invalid_argument("penalty exponent must be >= 1");
}

Tensor f_log_sigmoid(const Tensor& u) { return neg(softplus(neg(u))); }

Tensor diversity_loss(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("diversity_loss: " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  return mean(abs(sub(a, b)));
}

Tensor pose_penalty(const Tensor& pose_a, const Tensor& pose_b) {
  return cosine_residual(pose_a, pose_b, "pose_penalty");
}

Tensor pose_reconstruction(const Tensor& predicted, const Tensor& ground_truth) {
  return cosine_residual(predicted, ground_truth, "pose_reconstruction");
}

Tensor matching_gradient_penalty(const Critic& critic, std::span<const Tensor> images,
                                 std::span<const Tensor> matching, double k, double p) {
  if (images.size() != matching.size() || images.empty()) {
    throw std::invalid_argument("gradient penalty needs equally many (non-zero) images and vectors");
  }
  std::vector<Tensor> terms;
  terms.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    Tensor img = images[i].detach().set_requires_grad(true);
    Tensor e = matching[i].detach().set_requires_grad(true);
    const Tensor logit = sum(critic(img, e));
    const auto g = grad(logit, {img, e}, /*create_graph=*/true);
    terms.push_back(pow_scalar(add(l2_norm(g[0]), l2_norm(g[1])), p));
  }
  Tensor total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  return scale(total, k / static_cast<double>(terms.size()));
}

Tensor adversarial_loss_discriminator(const Tensor& logits_real, const Tensor& logits_mismatch,
                                      const Tensor& logits_fake, const Tensor& penalty) {
  Tensor loss = add(add(mean(softplus(neg(logits_real))), scale(mean(softplus(logits_mismatch)), 0.5)),
                    scale(mean(softplus(logits_fake)), 0.5));
  if (penalty.defined()) loss = add(loss, penalty);
  return loss;
}

Tensor adversarial_loss_generator(const Tensor& logits_fake) {
  return mean(softplus(neg(logits_fake)));
}

Tensor total_generator_loss(const Tensor& adversarial, const Tensor& diversity, const Tensor& pose,
                            const LossWeights& weights) {
  return add(sub(adversarial, scale(diversity, weights.lambda_div)),
             scale(pose, weights.lambda_pose));
}

}  // namespace cgnerf
