// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Differentiable tensor operations.
//
// Binary elementwise ops accept equal shapes or one of two bias-style
// broadcasts of the smaller operand onto the larger one:
//   tile   - the smaller shape is a suffix of the larger (per-column bias,
//            scalars);
//   repeat - same rank, equal leading extents, trailing extents of 1
//            (per-row scale such as [R x J x 1] against [R x J x L]).
// Anything else raises ShapeError naming both shapes.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

#include "cgnerf/tensor.hpp"

namespace cgnerf {

inline constexpr double kLeakyReluSlope = 0.2;

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

/// Full reduction to a one-element tensor of shape [1].
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sums out one axis (the axis is removed).
Tensor sum_axis(const Tensor& a, std::size_t axis);
/// Inserts a new axis of extent n at `axis`, replicating values.
Tensor broadcast_axis(const Tensor& a, std::size_t axis, std::int64_t n);
/// Reduces a broadcast result back to `shape` (adjoint of expand).
Tensor sum_to(const Tensor& a, const Shape& shape);
/// Broadcasts `a` up to `shape` under the tile/repeat rules.
Tensor expand(const Tensor& a, const Shape& shape);
/// Exclusive prefix sum along `axis`; with reverse=true, the exclusive suffix sum.
Tensor cumsum_exclusive(const Tensor& a, std::size_t axis, bool reverse = false);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
inline Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}
Tensor slice(const Tensor& a, std::size_t axis, std::int64_t start, std::int64_t length);
/// Places `a` at [start, start+len) of a zero tensor whose `axis` has extent `full`.
Tensor embed(const Tensor& a, std::size_t axis, std::int64_t start, std::int64_t full);
Tensor reshape(const Tensor& a, Shape shape);
/// 2-D transpose.
Tensor transpose(const Tensor& a);

/// [m x k] * [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// op(a) * op(b), where op transposes a 2-D operand when its flag is set.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b);
/// x [P x in] * W^T + b, with W stored [out x in] and b [out] (b may be undefined).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// sin(z * gamma + beta) for z [P x N] and gamma, beta [N], as one node.
Tensor modulated_sin(const Tensor& z, const Tensor& gamma, const Tensor& beta);

enum class Activation { kSin, kCos, kSigmoid, kSoftplus, kLeakyRelu, kExp, kRelu };

Tensor apply_activation(const Tensor& x, Activation kind);
Tensor sin(const Tensor& x);
Tensor cos(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = kLeakyReluSlope);
Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor pow_scalar(const Tensor& x, double p);
/// Euclidean norm of all entries, shape [1]. The gradient at 0 is taken as 0.
Tensor l2_norm(const Tensor& x);
/// 1/x elementwise, with 1/0 := 0.
Tensor safe_reciprocal(const Tensor& x);

/// x [C x H x W], w [O x C x k x k], bias [O] (may be undefined).
/// Output extent (H + 2 pad - k) / stride + 1 must be an exact division.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, std::int64_t stride,
              std::int64_t pad);
/// Gradient of conv2d with respect to its input, as a differentiable op.
Tensor conv2d_input_grad(const Tensor& grad_out, const Tensor& w, const Shape& input_shape,
                         std::int64_t stride, std::int64_t pad);
/// Gradient of conv2d with respect to its weights, as a differentiable op.
Tensor conv2d_weight_grad(const Tensor& x, const Tensor& grad_out, const Shape& weight_shape,
                          std::int64_t stride, std::int64_t pad);

/// [C x H x W] -> [C x fH x fW], each pixel copied into an f x f block.
Tensor upsample_nearest(const Tensor& x, std::int64_t factor);
/// [C x fH x fW] -> [C x H x W], summing each f x f block (adjoint of upsample).
Tensor block_sum(const Tensor& x, std::int64_t factor);

/// Output extent of a convolution, or ShapeError when the division is inexact.
std::int64_t conv_output_extent(std::int64_t in, std::int64_t kernel, std::int64_t stride,
                                std::int64_t pad);

}  // namespace cgnerf
