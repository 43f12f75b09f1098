// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "cgnerf/ops.hpp"

namespace cgnerf {
namespace {

thread_local bool t_grad_enabled = true;
thread_local Precision t_precision = Precision::kExact64;

void check_shape(const Shape& shape) {
  for (auto extent : shape) {
    if (extent <= 0) throw ShapeError("non-positive extent in shape " + shape_string(shape));
  }
}

}  // namespace

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Precision compute_precision() { return t_precision; }
PrecisionScope::PrecisionScope(Precision p) : saved_(t_precision) { t_precision = p; }
PrecisionScope::~PrecisionScope() { t_precision = saved_; }

bool grad_enabled() { return t_grad_enabled; }
void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

GradModeScope::GradModeScope(bool enabled) : saved_(t_grad_enabled) { t_grad_enabled = enabled; }
GradModeScope::~GradModeScope() { t_grad_enabled = saved_; }

Tensor::Tensor(Shape shape, double fill) : impl_(std::make_shared<TensorImpl>()) {
  check_shape(shape);
  impl_->data.assign(static_cast<std::size_t>(shape_numel(shape)), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : impl_(std::make_shared<TensorImpl>()) {
  check_shape(shape);
  if (static_cast<std::int64_t>(data.size()) != shape_numel(shape)) {
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                     shape_string(shape));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

Tensor Tensor::from(Shape shape, std::initializer_list<double> values) {
  return Tensor(std::move(shape), std::vector<double>(values));
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::int64_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_string(impl_->shape));
  }
  return impl_->shape[axis];
}

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

std::span<const double> Tensor::data() const { return impl_->data; }

std::span<double> Tensor::mutable_data() {
  if (impl_->grad_fn) throw AutodiffError("mutable_data() on a non-leaf tensor");
  return impl_->data;
}

double Tensor::item() const {
  if (impl_->data.size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(impl_->shape));
  }
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  if (impl_->grad_fn) throw AutodiffError("set_requires_grad() on a non-leaf tensor");
  impl_->requires_grad = value;
  return *this;
}

bool Tensor::is_leaf() const { return impl_->grad_fn == nullptr; }

const std::shared_ptr<GradNode>& Tensor::grad_fn() const { return impl_->grad_fn; }

Tensor Tensor::grad() const { return impl_->grad; }

void Tensor::zero_grad() {
  impl_->grad = Tensor();
  impl_->grad_written = false;
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data); }

Tensor Tensor::make_result(Shape shape, std::vector<double> data, const char* name,
                           std::vector<Tensor> inputs, BackwardFn backward) {
  Tensor out(std::move(shape), std::move(data));
  if (!t_grad_enabled) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return out;
  auto node = std::make_shared<GradNode>();
  node->name = name;
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  out.impl_->requires_grad = true;
  out.impl_->grad_fn = std::move(node);
  return out;
}

namespace {

struct Sweep {
  // Tensors in post-order (inputs before consumers), restricted to those from
  // which a wanted tensor is reachable.
  std::vector<Tensor> order;
  std::unordered_set<const TensorImpl*> live;
};

template <typename IsTarget>
Sweep build_sweep(const Tensor& root, IsTarget is_target) {
  Sweep sweep;
  std::unordered_set<const TensorImpl*> visited;
  struct Frame {
    Tensor t;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root.impl());
  while (!stack.empty()) {
    Frame& top = stack.back();
    const auto& node = top.t.grad_fn();
    if (node && top.next < node->inputs.size()) {
      const Tensor& child = node->inputs[top.next++];
      if (child.requires_grad() && visited.insert(child.impl()).second) {
        stack.push_back({child, 0});
      }
      continue;
    }
    bool live = is_target(top.t);
    if (node) {
      for (const auto& in : node->inputs) {
        if (in.requires_grad() && sweep.live.count(in.impl())) live = true;
      }
    }
    if (live) {
      sweep.live.insert(top.t.impl());
      sweep.order.push_back(top.t);
    }
    stack.pop_back();
  }
  return sweep;
}

void accumulate(std::unordered_map<const TensorImpl*, Tensor>& grads, const Tensor& key,
                const Tensor& g) {
  if (g.shape() != key.shape()) {
    throw AutodiffError("gradient shape " + shape_string(g.shape()) + " does not match " +
                        shape_string(key.shape()));
  }
  auto it = grads.find(key.impl());
  if (it == grads.end()) {
    grads.emplace(key.impl(), g);
  } else {
    it->second = add(it->second, g);
  }
}

void check_loss(const Tensor& loss) {
  if (!loss.defined()) throw AutodiffError("backward on an undefined tensor");
  if (loss.numel() != 1) {
    throw AutodiffError("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) throw AutodiffError("backward on a detached tensor");
}

// Runs the reverse sweep. `on_reached` is called for every live tensor once its
// gradient is complete.
template <typename OnReached>
void run_sweep(const Tensor& loss, const Sweep& sweep, OnReached on_reached) {
  std::unordered_map<const TensorImpl*, Tensor> grads;
  grads.emplace(loss.impl(), Tensor::ones(loss.shape()));
  for (auto it = sweep.order.rbegin(); it != sweep.order.rend(); ++it) {
    const Tensor& t = *it;
    auto found = grads.find(t.impl());
    if (found == grads.end()) continue;
    Tensor g = std::move(found->second);
    grads.erase(found);
    on_reached(t, g);
    const auto& node = t.grad_fn();
    if (!node) continue;
    std::vector<bool> needs(node->inputs.size());
    bool any = false;
    for (std::size_t i = 0; i < needs.size(); ++i) {
      const Tensor& in = node->inputs[i];
      needs[i] = in.requires_grad() && sweep.live.count(in.impl()) > 0;
      any = any || needs[i];
    }
    if (!any) continue;
    auto in_grads = node->backward(t, g, needs);
    for (std::size_t i = 0; i < needs.size(); ++i) {
      if (needs[i] && i < in_grads.size() && in_grads[i].defined()) {
        accumulate(grads, node->inputs[i], in_grads[i]);
      }
    }
  }
}

}  // namespace

void backward(const Tensor& loss) {
  check_loss(loss);
  auto sweep = build_sweep(loss, [](const Tensor& t) { return t.is_leaf() && t.requires_grad(); });
  for (const auto& t : sweep.order) {
    if (t.is_leaf() && t.impl()->grad_written) {
      throw AutodiffError("gradient already populated; call zero_grad() before backward()");
    }
  }
  NoGradScope no_grad;
  run_sweep(loss, sweep, [](const Tensor& t, const Tensor& g) {
    if (!t.is_leaf()) return;
    t.impl()->grad = g;
    t.impl()->grad_written = true;
  });
}

std::vector<Tensor> grad(const Tensor& output, std::span<const Tensor> inputs, bool create_graph) {
  check_loss(output);
  std::unordered_map<const TensorImpl*, std::size_t> wanted;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].defined()) throw AutodiffError("grad() with an undefined input");
    wanted.emplace(inputs[i].impl(), i);
  }
  auto sweep = build_sweep(output, [&](const Tensor& t) { return wanted.count(t.impl()) > 0; });
  std::vector<Tensor> result(inputs.size());
  {
    GradModeScope mode(create_graph);
    run_sweep(output, sweep, [&](const Tensor& t, const Tensor& g) {
      auto it = wanted.find(t.impl());
      if (it == wanted.end()) return;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].impl() == t.impl()) result[i] = g;
      }
    });
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!result[i].defined()) result[i] = Tensor::zeros(inputs[i].shape());
  }
  return result;
}

}  // namespace cgnerf
