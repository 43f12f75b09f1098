// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cgnerf/grad_check.hpp"
#include "cgnerf/nn.hpp"
#include "cgnerf/ops.hpp"
#include "test_util.hpp"

namespace cgnerf {
namespace {

using testing::random_leaf;

TEST(Elementwise, AddZerosIsIdentity) {
  std::mt19937_64 rng(1);
  const Tensor x = random_leaf({3, 4}, rng);
  const Tensor y = add(x, Tensor::zeros({3, 4}));
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Elementwise, MeanOfConstantIsConstant) {
  for (const Shape& s : {Shape{1}, Shape{5}, Shape{2, 3}, Shape{2, 3, 4}}) {
    EXPECT_DOUBLE_EQ(mean(Tensor::full(s, 7.0)).item(), 7.0);
  }
}

TEST(Elementwise, MeanOfSquareGradientMatchesFiniteDifferences) {
  Tensor x = Tensor::from({2}, {1.0, 2.0});
  std::vector<Tensor> params{x};
  const auto r = grad_check([&] { return mean(mul(x, x)); }, params);
  EXPECT_LT(r.max_rel_error, 1e-6) << describe(r);
  x.set_requires_grad(true);
  const auto g = grad(mean(mul(x, x)), std::vector<Tensor>{x});
  EXPECT_NEAR(g[0][0], 1.0, 1e-12);
  EXPECT_NEAR(g[0][1], 2.0, 1e-12);
}

TEST(Elementwise, BroadcastShapesRejected) {
  EXPECT_THROW(add(Tensor::zeros({2, 3}), Tensor::zeros({4})), ShapeError);
  EXPECT_THROW(mul(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), ShapeError);
}

TEST(Matmul, IdentityMatrix) {
  std::mt19937_64 rng(2);
  const Tensor x = random_leaf({3, 2}, rng);
  const Tensor eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const Tensor y = matmul(eye, x);
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Matmul, HandArithmetic) {
  const Tensor y = matmul(Tensor::from({2, 2}, {1, 2, 3, 4}), Tensor::from({2, 1}, {1, 1}));
  ASSERT_EQ(y.shape(), (Shape{2, 1}));
  EXPECT_EQ(y[0], 3.0);
  EXPECT_EQ(y[1], 7.0);
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::vector<Tensor> p{random_leaf({3, 4}, rng), random_leaf({4, 2}, rng)};
  const auto r = grad_check([&] { return sum(mul(matmul(p[0], p[1]), matmul(p[0], p[1]))); }, p);
  EXPECT_LT(r.max_rel_error, 1e-6) << describe(r);
}

TEST(Matmul, TransposedOperandsAgreeWithExplicitTranspose) {
  std::mt19937_64 rng(4);
  std::vector<Tensor> p{random_leaf({4, 3}, rng), random_leaf({2, 4}, rng)};
  const Tensor a = matmul(p[0], p[1], true, true);
  const Tensor b = matmul(transpose(p[0]), transpose(p[1]));
  ASSERT_EQ(a.shape(), b.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      std::vector<Tensor> q{random_leaf(ta ? Shape{4, 3} : Shape{3, 4}, rng),
                            random_leaf(tb ? Shape{2, 4} : Shape{4, 2}, rng)};
      const auto r = grad_check([&] { return sum(sin(matmul(q[0], q[1], ta, tb))); }, q);
      EXPECT_LT(r.max_rel_error, 1e-6) << ta << tb << " " << describe(r);
    }
  }
}

TEST(Matmul, DimensionMismatchThrows) {
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST(Activation, SinAtZero) {
  Tensor x = Tensor::scalar(0.0);
  x.set_requires_grad(true);
  const Tensor y = sin(x);
  EXPECT_EQ(y.item(), 0.0);
  EXPECT_EQ(grad(y, std::vector<Tensor>{x})[0].item(), 1.0);
}

TEST(Activation, SigmoidAtZero) { EXPECT_EQ(sigmoid(Tensor::scalar(0.0)).item(), 0.5); }

TEST(Activation, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (Activation kind : {Activation::kSin, Activation::kCos, Activation::kSigmoid,
                          Activation::kSoftplus, Activation::kLeakyRelu, Activation::kExp,
                          Activation::kRelu}) {
    std::vector<Tensor> p{random_leaf({3, 5}, rng)};
    const auto r = grad_check([&] { return sum(apply_activation(p[0], kind)); }, p);
    EXPECT_LT(r.max_rel_error, 1e-6) << static_cast<int>(kind) << " " << describe(r);
  }
}

TEST(Activation, SoftplusIsStableForLargeInputs) {
  const Tensor y = softplus(Tensor::from({3}, {-800.0, 0.0, 800.0}));
  EXPECT_EQ(y[0], 0.0);
  EXPECT_NEAR(y[1], std::log(2.0), 1e-15);
  EXPECT_EQ(y[2], 800.0);
}

TEST(Activation, ModulatedSinMatchesComposition) {
  std::mt19937_64 rng(6);
  std::vector<Tensor> p{random_leaf({5, 3}, rng), random_leaf({3}, rng), random_leaf({3}, rng)};
  const Tensor fused = modulated_sin(p[0], p[1], p[2]);
  const Tensor plain = sin(add(mul(p[0], p[1]), p[2]));
  for (std::int64_t i = 0; i < fused.numel(); ++i) EXPECT_NEAR(fused[i], plain[i], 1e-15);
  const auto r = grad_check([&] { return sum(mul(modulated_sin(p[0], p[1], p[2]), p[0])); }, p);
  EXPECT_LT(r.max_rel_error, 1e-6) << describe(r);
}

TEST(Reduction, OtherOpsGradients) {
  std::mt19937_64 rng(7);
  std::vector<Tensor> p{random_leaf({2, 3, 4}, rng)};
  const auto check = [&](const std::function<Tensor()>& f, const char* what) {
    const auto r = grad_check(f, p);
    EXPECT_LT(r.max_rel_error, 1e-6) << what << " " << describe(r);
  };
  const Tensor w = Tensor::from({4}, {0.3, -1.0, 2.0, 0.5});
  check([&] { return sum(mul(sum_axis(p[0], 1), sum_axis(p[0], 1))); }, "sum_axis");
  check([&] { return sum(mul(cumsum_exclusive(p[0], 2), p[0])); }, "cumsum");
  check([&] { return sum(mul(cumsum_exclusive(p[0], 1, true), p[0])); }, "cumsum reverse");
  check([&] { return sum(sin(reshape(slice(p[0], 2, 1, 2), {12}))); }, "slice");
  check([&] { return sum(mul(embed(p[0], 1, 1, 5), embed(p[0], 1, 1, 5))); }, "embed");
  check([&] { return sum(mul(concat({p[0], sin(p[0])}, 2), concat({p[0], p[0]}, 2))); }, "concat");
  check([&] { return sum(mul(broadcast_axis(p[0], 1, 2), broadcast_axis(p[0], 1, 2))); },
        "broadcast_axis");
  check([&] { return sum(mul(p[0], w)); }, "tile broadcast");
  check([&] { return l2_norm(p[0]); }, "l2_norm");
  check([&] { return sum(pow_scalar(add_scalar(mul(p[0], p[0]), 0.5), 1.5)); }, "pow");
  // Away from the kink: the stencil must not straddle zero.
  check([&] { return sum(mul(abs(add_scalar(p[0], 0.3)), p[0])); }, "abs");
  check([&] { return sum(mul(transpose(reshape(p[0], {6, 4})), transpose(reshape(p[0], {6, 4})))); },
        "transpose");
  check([&] { return sum(mul(sum_to(p[0], {3, 4}), w)); }, "sum_to");
}

TEST(Reduction, L2NormGradientAtZeroIsZero) {
  Tensor x = Tensor::zeros({3});
  x.set_requires_grad(true);
  const auto g = grad(l2_norm(x), std::vector<Tensor>{x});
  for (std::int64_t i = 0; i < 3; ++i) EXPECT_EQ(g[0][i], 0.0);
}

TEST(Conv, IdentityKernel) {
  std::mt19937_64 rng(8);
  const Tensor x = random_leaf({1, 3, 3}, rng);
  const Tensor y = conv2d(x, Tensor::ones({1, 1, 1, 1}), Tensor::zeros({1}), 1, 0);
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Conv, AllOnesKernelSumsPatch) {
  const Tensor y = conv2d(Tensor::ones({1, 3, 3}), Tensor::ones({1, 1, 3, 3}), Tensor(), 1, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y.item(), 9.0);
}

TEST(Conv, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  std::vector<Tensor> p{random_leaf({2, 4, 4}, rng), random_leaf({3, 2, 3, 3}, rng),
                        random_leaf({3}, rng)};
  const auto r = grad_check([&] { return sum(sin(conv2d(p[0], p[1], p[2], 1, 1))); }, p);
  EXPECT_LT(r.max_rel_error, 1e-5) << describe(r);
  std::vector<Tensor> q{p[0], random_leaf({3, 2, 4, 4}, rng), p[2]};
  const auto s = grad_check([&] { return sum(sin(conv2d(q[0], q[1], q[2], 2, 1))); }, q);
  EXPECT_LT(s.max_rel_error, 1e-5) << describe(s);
}

TEST(Conv, InexactGeometryRejected) {
  EXPECT_THROW(conv2d(Tensor::zeros({1, 5, 5}), Tensor::zeros({1, 1, 4, 4}), Tensor(), 2, 1),
               ShapeError);
}

TEST(Conv, SecondOrderGradientOfInputGradientNorm) {
  // The gradient penalty differentiates an input-gradient norm with respect
  // to the weights; that path runs through conv2d_input_grad and
  // conv2d_weight_grad.
  std::mt19937_64 rng(10);
  Tensor x = random_leaf({2, 4, 4}, rng);
  std::vector<Tensor> p{random_leaf({3, 2, 4, 4}, rng), random_leaf({3}, rng)};
  const auto f = [&] {
    Tensor xi = x.detach();
    xi.set_requires_grad(true);
    const Tensor out = sum(sin(conv2d(xi, p[0], p[1], 2, 1)));
    const Tensor gx = grad(out, std::vector<Tensor>{xi}, true)[0];
    return pow_scalar(l2_norm(gx), 2.0);
  };
  const auto r = grad_check(f, p);
  EXPECT_LT(r.max_rel_error, 1e-5) << describe(r);
}

TEST(Upsample, ReplicatesValue) {
  const Tensor y = upsample_nearest(Tensor::full({1, 1, 1}, 2.5), 2);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 2}));
  for (std::int64_t i = 0; i < 4; ++i) EXPECT_EQ(y[i], 2.5);
}

TEST(Upsample, FactorOneIsIdentity) {
  std::mt19937_64 rng(11);
  const Tensor x = random_leaf({2, 3, 3}, rng);
  const Tensor y = upsample_nearest(x, 1);
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Upsample, GradientOfSumIsFactorSquared) {
  Tensor x = Tensor::ones({2, 3, 3});
  x.set_requires_grad(true);
  const auto g = grad(sum(upsample_nearest(x, 3)), std::vector<Tensor>{x})[0];
  for (std::int64_t i = 0; i < g.numel(); ++i) EXPECT_EQ(g[i], 9.0);
}

TEST(Backward, IdentityLoss) {
  Tensor x = Tensor::scalar(3.0);
  x.set_requires_grad(true);
  backward(x);
  EXPECT_EQ(x.grad().item(), 1.0);
}

TEST(Backward, FanOutAccumulates) {
  Tensor x = Tensor::scalar(3.0);
  x.set_requires_grad(true);
  backward(add(x, x));
  EXPECT_EQ(x.grad().item(), 2.0);
}

TEST(Backward, SinMatmulMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  std::vector<Tensor> p{random_leaf({3, 4}, rng), random_leaf({4, 2}, rng)};
  const auto r = grad_check([&] { return sum(matmul(sin(p[0]), p[1])); }, p);
  EXPECT_LT(r.max_rel_error, 1e-5) << describe(r);
}

TEST(Backward, SecondCallWithoutResetRejected) {
  Tensor x = Tensor::scalar(1.0);
  x.set_requires_grad(true);
  backward(mul(x, x));
  EXPECT_THROW(backward(mul(x, x)), AutodiffError);
  x.zero_grad();
  EXPECT_NO_THROW(backward(mul(x, x)));
  EXPECT_EQ(x.grad().item(), 2.0);
}

TEST(Backward, NonScalarLossRejected) {
  Tensor x = Tensor::zeros({2});
  x.set_requires_grad(true);
  EXPECT_THROW(backward(sin(x)), AutodiffError);
}

TEST(Backward, NoGradScopeRecordsNothing) {
  Tensor x = Tensor::scalar(1.0);
  x.set_requires_grad(true);
  Tensor y;
  {
    NoGradScope off;
    y = sin(x);
  }
  EXPECT_FALSE(y.requires_grad());
}

TEST(Precision, Fast32StaysCloseToExact64) {
  std::mt19937_64 rng(13);
  const Tensor a = random_leaf({16, 8}, rng), b = random_leaf({8, 4}, rng);
  const Tensor exact = sin(matmul(a, b));
  Tensor fast;
  {
    PrecisionScope scope(Precision::kFast32);
    fast = sin(matmul(a, b));
  }
  for (std::int64_t i = 0; i < exact.numel(); ++i) EXPECT_NEAR(fast[i], exact[i], 1e-5);
}

TEST(GradCheck, LinearFunctionIsExact) {
  std::mt19937_64 rng(14);
  std::vector<Tensor> p{random_leaf({4}, rng)};
  const Tensor w = Tensor::from({4}, {1.0, -2.0, 0.5, 3.0});
  const auto r = grad_check([&] { return sum(mul(p[0], w)); }, p);
  EXPECT_LT(r.max_rel_error, 1e-10) << describe(r);
}

// sin with a wrong derivative (-cos), built through the public op factory.
Tensor broken_sin(const Tensor& x) {
  std::vector<double> out;
  for (double v : x.data()) out.push_back(std::sin(v));
  return Tensor::make_result(x.shape(), std::move(out), "broken_sin", {x},
                             [x](const Tensor&, const Tensor& g, const std::vector<bool>&) {
                               return std::vector<Tensor>{neg(mul(g, cos(x)))};
                             });
}

TEST(GradCheck, DetectsCorruptedSinDerivative) {
  std::mt19937_64 rng(15);
  std::vector<Tensor> p{random_leaf({5}, rng)};
  const auto r = grad_check([&] { return sum(broken_sin(p[0])); }, p);
  EXPECT_GT(r.max_rel_error, 0.1) << describe(r);
}

TEST(GradCheck, RestoresParameterValues) {
  std::mt19937_64 rng(16);
  std::vector<Tensor> p{random_leaf({3}, rng)};
  const std::vector<double> before(p[0].data().begin(), p[0].data().end());
  grad_check([&] { return sum(exp(p[0])); }, p);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(p[0].data()[i], before[i]);
}

}  // namespace
}  // namespace cgnerf
