// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cgnerf {

Tensor ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  value.set_requires_grad(true);
  entries_.emplace_back(std::move(name), value);
  return value;
}

const Tensor& ParameterSet::get(std::string_view name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

std::int64_t ParameterSet::total_numel() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  if (other.size() != size()) {
    throw ShapeError("parameter count mismatch: " + std::to_string(other.size()) + " vs " +
                     std::to_string(size()));
  }
  for (auto& [name, t] : entries_) {
    const Tensor& src = other.get(name);
    if (src.shape() != t.shape()) {
      throw ShapeError("parameter '" + name + "' has shape " + shape_string(src.shape()) +
                       ", expected " + shape_string(t.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), t.mutable_data().begin());
  }
}

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.mutable_data()) v = dist(rng);
  return t;
}

Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(std::move(shape));
  for (double& v : t.mutable_data()) v = dist(rng);
  return t;
}

Tensor siren_first_init(std::int64_t out, std::int64_t in, std::mt19937_64& rng) {
  return uniform_tensor({out, in}, 1.0 / static_cast<double>(in), rng);
}

Tensor siren_hidden_init(std::int64_t out, std::int64_t in, std::mt19937_64& rng) {
  return uniform_tensor({out, in}, std::sqrt(6.0 / static_cast<double>(in)) / 30.0, rng);
}

Tensor he_uniform(Shape shape, std::int64_t fan_in, std::mt19937_64& rng, double gain) {
  return uniform_tensor(std::move(shape), gain * std::sqrt(6.0 / static_cast<double>(fan_in)), rng);
}

}  // namespace cgnerf
