// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Dense real tensors with a reverse-mode gradient tape.
//
// A Tensor is a shared handle: copies alias the same storage and graph node.
// Operations on tensors that require gradients record a GradNode holding the
// operation's inputs and a backward closure. Backward closures are themselves
// written in terms of differentiable operations, so a gradient can be
// differentiated once more (create_graph=true), which the matching-aware
// gradient penalty relies on.
//
// Gradient semantics: backward() writes leaf gradients into Tensor::grad().
// A second backward() that reaches a leaf whose gradient has not been reset
// with zero_grad() is rejected with AutodiffError.

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgnerf {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class AutodiffError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Arithmetic precision used by the heavy kernels (GEMM, convolution and
/// transcendental functions). Storage is always 64-bit; kFast32 evaluates
/// those kernels in single precision for training throughput.
enum class Precision { kExact64, kFast32 };

Precision compute_precision();

class PrecisionScope {
 public:
  explicit PrecisionScope(Precision p);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  Precision saved_;
};

/// Asks the C allocator (glibc) to keep freed large blocks in the heap rather
/// than returning them to the OS. Autodiff allocates and frees many
/// megabyte-sized buffers per step, and fresh pages are slow to fault in.
/// No effect on other C libraries. Safe to call more than once.
void tune_allocator();

bool grad_enabled();

/// Enables or disables graph recording for the current thread.
class GradModeScope {
 public:
  explicit GradModeScope(bool enabled);
  ~GradModeScope();
  GradModeScope(const GradModeScope&) = delete;
  GradModeScope& operator=(const GradModeScope&) = delete;

 private:
  bool saved_;
};

class NoGradScope : public GradModeScope {
 public:
  NoGradScope() : GradModeScope(false) {}
};

class Tensor;
struct TensorImpl;

/// Backward closure: receives the node's output, the gradient flowing into it
/// and a per-input mask of which input gradients are wanted. Returns one
/// gradient per input; unwanted entries may be left undefined.
using BackwardFn = std::function<std::vector<Tensor>(
    const Tensor& out, const Tensor& grad_out, const std::vector<bool>& needs)>;

struct GradNode {
  const char* name = "";
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor full(Shape shape, double v) { return Tensor(std::move(shape), v); }
  static Tensor scalar(double v) { return Tensor(Shape{1}, v); }
  static Tensor from(Shape shape, std::initializer_list<double> values);

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const;
  std::int64_t dim(std::size_t axis) const;
  std::size_t ndim() const { return shape().size(); }
  std::int64_t numel() const;

  std::span<const double> data() const;
  /// Writable view. Only leaves may be written; interior nodes would silently
  /// invalidate their recorded gradients.
  std::span<double> mutable_data();
  double item() const;
  double operator[](std::int64_t i) const { return data()[static_cast<std::size_t>(i)]; }

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);
  bool is_leaf() const;
  const std::shared_ptr<GradNode>& grad_fn() const;

  /// Accumulated gradient written by backward(); undefined until then.
  Tensor grad() const;
  void zero_grad();

  /// Same values, no graph history, fresh storage.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  TensorImpl* impl() const { return impl_.get(); }

  /// Builds an operation result. Records a GradNode when grad mode is on and
  /// any input requires a gradient.
  static Tensor make_result(Shape shape, std::vector<double> data, const char* name,
                            std::vector<Tensor> inputs, BackwardFn backward);

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;

  friend void backward(const Tensor& loss);
  friend std::vector<Tensor> grad(const Tensor& output, std::span<const Tensor> inputs,
                                  bool create_graph);
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::shared_ptr<GradNode> grad_fn;
  Tensor grad;
  bool grad_written = false;
};

/// Reverse sweep from a scalar loss; writes Tensor::grad() of every reached
/// leaf that requires a gradient.
void backward(const Tensor& loss);

/// Gradients of a scalar output with respect to `inputs`, without touching
/// Tensor::grad(). Inputs the output does not depend on get zero gradients.
/// With create_graph=true the returned gradients are themselves differentiable.
std::vector<Tensor> grad(const Tensor& output, std::span<const Tensor> inputs,
                         bool create_graph = false);

inline std::vector<Tensor> grad(const Tensor& output, std::initializer_list<Tensor> inputs,
                                bool create_graph = false) {
  return grad(output, std::span<const Tensor>(inputs.begin(), inputs.size()), create_graph);
}

}  // namespace cgnerf
