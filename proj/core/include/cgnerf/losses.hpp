// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Training objectives. Every function returns a differentiable [1] tensor and
// follows a minimize convention: the discriminator minimizes
//   softplus(-l_real) + 1/2 softplus(l_mismatch) + 1/2 softplus(l_fake)
//   + gradient penalty + pose reconstruction,
// and the generator minimizes softplus(-l_fake) - lambda_div * L_div
// + lambda_pose * L_pose.

#pragma once

#include <functional>
#include <span>

#include "cgnerf/tensor.hpp"

namespace cgnerf {

struct LossWeights {
  double lambda_div = 1.0;
  double lambda_pose = 1.0;
  double penalty_scale = 2.0;     // k
  double penalty_exponent = 6.0;  // p
  void validate() const;
};

/// -log(1 + exp(-u)), evaluated as -softplus(-u).
Tensor f_log_sigmoid(const Tensor& u);

/// Mean absolute difference of two equally shaped images.
Tensor diversity_loss(const Tensor& a, const Tensor& b);

/// Mean over rows and both angle components of 1 - cos(a - b); a, b [N x 2].
Tensor pose_penalty(const Tensor& pose_a, const Tensor& pose_b);

/// Same cosine form against known poses (a constant [N x 2] tensor).
Tensor pose_reconstruction(const Tensor& predicted, const Tensor& ground_truth);

/// Critic evaluated on one (image, matching vector) pair, returning a [1] or
/// [1 x 1] logit.
using Critic = std::function<Tensor(const Tensor& image, const Tensor& matching)>;

/// k * mean_i (||grad_I D(I_i, e_i)|| + ||grad_e D(I_i, e_i)||)^p over the
/// batch, differentiable with respect to the critic's parameters.
Tensor matching_gradient_penalty(const Critic& critic, std::span<const Tensor> images,
                                 std::span<const Tensor> matching, double k, double p);

Tensor adversarial_loss_discriminator(const Tensor& logits_real, const Tensor& logits_mismatch,
                                      const Tensor& logits_fake, const Tensor& penalty);

Tensor adversarial_loss_generator(const Tensor& logits_fake);

Tensor total_generator_loss(const Tensor& adversarial, const Tensor& diversity,
                            const Tensor& pose, const LossWeights& weights);

}  // namespace cgnerf
