// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace cgnerf {

GradCheckReport grad_check(const std::function<Tensor()>& f, std::span<Tensor> params, double eps,
                           double abs_floor) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
  PrecisionScope exact(Precision::kExact64);
  std::vector<bool> saved_flags;
  for (auto& p : params) {
    saved_flags.push_back(p.requires_grad());
    p.set_requires_grad(true);
  }
  std::vector<Tensor> analytic;
  {
    GradModeScope on(true);
    analytic = grad(f(), std::span<const Tensor>(params.data(), params.size()));
  }

  // Grad mode stays on: f may itself differentiate (gradient penalties).
  GradCheckReport report;
  GradModeScope on(true);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      const auto at = [&](double offset) {
        values[i] = orig + offset;
        return f().item();
      };
      // Five-point stencil: truncation error O(eps^4).
      const double numeric =
          (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps);
      values[i] = orig;
      const double a = analytic[pi].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > report.max_rel_error || !std::isfinite(rel)) {
        report.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
        report.worst_param = pi;
        report.worst_index = static_cast<std::int64_t>(i);
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi].set_requires_grad(saved_flags[pi]);
  return report;
}

std::string describe(const GradCheckReport& report) {
  std::ostringstream os;
  os << "max rel error " << report.max_rel_error << " at param " << report.worst_param << "["
     << report.worst_index << "] analytic=" << report.analytic << " numeric=" << report.numeric;
  return os.str();
}

}  // namespace cgnerf
