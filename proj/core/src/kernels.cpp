// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "cgnerf/tensor.hpp"

namespace cgnerf::kernels {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;

bool fast() { return compute_precision() == Precision::kFast32; }

template <typename T>
void gemm_typed(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
                bool trans_a, bool trans_b) {
  MutMap<T> cm(c, m, n);
  // Stored shapes: A is (m x k) or (k x m) when transposed; likewise B.
  const std::int64_t ar = trans_a ? k : m, ac = trans_a ? m : k;
  const std::int64_t br = trans_b ? n : k, bc = trans_b ? k : n;
  ConstMap<T> am(a, ar, ac);
  ConstMap<T> bm(b, br, bc);
  if (!trans_a && !trans_b) {
    cm.noalias() = am * bm;
  } else if (trans_a && !trans_b) {
    cm.noalias() = am.transpose() * bm;
  } else if (!trans_a && trans_b) {
    cm.noalias() = am * bm.transpose();
  } else {
    cm.noalias() = am.transpose() * bm.transpose();
  }
}

using ArrF = Eigen::Array<float, Eigen::Dynamic, 1>;
using ArrD = Eigen::Array<double, Eigen::Dynamic, 1>;

Eigen::Map<const ArrD> view(std::span<const double> s) {
  return Eigen::Map<const ArrD>(s.data(), static_cast<Eigen::Index>(s.size()));
}
Eigen::Map<ArrD> view(std::span<double> s) {
  return Eigen::Map<ArrD>(s.data(), static_cast<Eigen::Index>(s.size()));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

void gemm(const double* a, const double* b, double* c, std::int64_t m, std::int64_t k,
          std::int64_t n, bool trans_a, bool trans_b) {
  if (!fast()) {
    gemm_typed<double>(a, b, c, m, k, n, trans_a, trans_b);
    return;
  }
  // Reused per-thread scratch avoids three allocations per call.
  thread_local std::vector<float> af, bf, cf;
  af.assign(a, a + m * k);
  bf.assign(b, b + k * n);
  cf.resize(static_cast<std::size_t>(m * n));
  gemm_typed<float>(af.data(), bf.data(), cf.data(), m, k, n, trans_a, trans_b);
  std::copy(cf.begin(), cf.end(), c);
}

// Evaluates f on a single-precision copy. Materializing the float array
// first lets Eigen vectorize the transcendental; a fused cast chain does not.
template <typename F>
void float_map(std::span<const double> in, std::span<double> out, F f) {
  thread_local ArrF x, y;
  x = view(in).cast<float>();
  y = f(x);
  view(out) = y.cast<double>();
}

void sin(std::span<const double> in, std::span<double> out) {
  if (fast()) return float_map(in, out, [](const ArrF& x) { return x.sin(); });
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::sin(in[i]);
}

void cos(std::span<const double> in, std::span<double> out) {
  if (fast()) return float_map(in, out, [](const ArrF& x) { return x.cos(); });
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::cos(in[i]);
}

void exp(std::span<const double> in, std::span<double> out) {
  if (fast()) return float_map(in, out, [](const ArrF& x) { return x.exp(); });
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::exp(in[i]);
}

void sigmoid(std::span<const double> in, std::span<double> out) {
  if (fast()) {
    return float_map(in, out, [](const ArrF& x) { return 1.0f / (1.0f + (-x).exp()); });
  }
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = stable_sigmoid(in[i]);
}

void softplus(std::span<const double> in, std::span<double> out) {
  if (fast()) {
    return float_map(in, out, [](const ArrF& x) { return x.max(0.0f) + (-x.abs()).exp().log1p(); });
  }
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = stable_softplus(in[i]);
}

void im2col(const double* image, const ConvGeometry& g, double* cols) {
  const std::int64_t np = g.out_pixels();
  for (std::int64_t c = 0; c < g.channels; ++c) {
    for (std::int64_t ky = 0; ky < g.kernel; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel; ++kx) {
        double* row = cols + ((c * g.kernel + ky) * g.kernel + kx) * np;
        for (std::int64_t oy = 0; oy < g.out_height; ++oy) {
          const std::int64_t iy = oy * g.stride + ky - g.pad;
          double* dst = row + oy * g.out_width;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_width, 0.0);
            continue;
          }
          const double* src = image + (c * g.height + iy) * g.width;
          for (std::int64_t ox = 0; ox < g.out_width; ++ox) {
            const std::int64_t ix = ox * g.stride + kx - g.pad;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeometry& g, double* image) {
  const std::int64_t np = g.out_pixels();
  for (std::int64_t c = 0; c < g.channels; ++c) {
    for (std::int64_t ky = 0; ky < g.kernel; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel; ++kx) {
        const double* row = cols + ((c * g.kernel + ky) * g.kernel + kx) * np;
        for (std::int64_t oy = 0; oy < g.out_height; ++oy) {
          const std::int64_t iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.height) continue;
          double* dst = image + (c * g.height + iy) * g.width;
          const double* src = row + oy * g.out_width;
          for (std::int64_t ox = 0; ox < g.out_width; ++ox) {
            const std::int64_t ix = ox * g.stride + kx - g.pad;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace cgnerf::kernels
