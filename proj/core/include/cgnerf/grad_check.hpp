// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <string>

#include "cgnerf/tensor.hpp"

namespace cgnerf {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::int64_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares the reverse-mode gradient of a scalar function against the
/// five-point central difference
///   (8 (f(p+h) - f(p-h)) - (f(p+2h) - f(p-2h))) / (12 h)
/// coordinate by coordinate. Relative error is |a - n| / max(|a|, |n|, abs_floor);
/// the floor keeps components dominated by rounding in f from reading as
/// large relative errors. Always evaluates in 64-bit precision. `params`
/// must be leaves; they are restored on return.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                           double eps = 1e-4, double abs_floor = 1e-6);

std::string describe(const GradCheckReport& report);

}  // namespace cgnerf
