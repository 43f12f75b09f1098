// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Raw numeric kernels behind the differentiable ops. All buffers are row-major
// doubles; the active Precision decides whether GEMM and transcendental
// functions run in double or single precision.

#pragma once

#include <cstdint>
#include <span>

namespace cgnerf::kernels {

/// C[M x N] = op(A) * op(B) where op(A) is M x K and op(B) is K x N.
void gemm(const double* a, const double* b, double* c, std::int64_t m, std::int64_t k,
          std::int64_t n, bool trans_a, bool trans_b);

void sin(std::span<const double> in, std::span<double> out);
void cos(std::span<const double> in, std::span<double> out);
void exp(std::span<const double> in, std::span<double> out);
void sigmoid(std::span<const double> in, std::span<double> out);
void softplus(std::span<const double> in, std::span<double> out);

struct ConvGeometry {
  std::int64_t channels, height, width;
  std::int64_t kernel, stride, pad;
  std::int64_t out_height, out_width;
  std::int64_t patch() const { return channels * kernel * kernel; }
  std::int64_t out_pixels() const { return out_height * out_width; }
};

/// cols[patch x out_pixels] from image[channels x height x width].
void im2col(const double* image, const ConvGeometry& g, double* cols);
/// Adjoint of im2col: scatters-adds cols back into a zeroed image.
void col2im(const double* cols, const ConvGeometry& g, double* image);

}  // namespace cgnerf::kernels
