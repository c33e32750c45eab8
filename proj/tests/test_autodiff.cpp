// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dynloss/autodiff.hpp"
#include "dynloss/gradient_check.hpp"

namespace dynloss::ad {
namespace {

constexpr double kEps = 1e-5;
constexpr double kTol = 1e-4;

std::vector<double> uniform_values(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Values bounded away from zero in magnitude, for |x| checks.
std::vector<double> nonzero_values(std::mt19937_64& rng, std::size_t n) {
  auto v = uniform_values(rng, n, 0.1, 2.0);
  std::bernoulli_distribution flip(0.5);
  for (auto& x : v) {
    if (flip(rng)) x = -x;
  }
  return v;
}

// Reduces y to a scalar with fixed random weights so every output element
// contributes a distinct partial.
Var weighted_sum(Graph& g, Var y, const std::vector<double>& w) {
  return sum(mul(y, g.constant(Tensor(y.shape(), w))));
}

struct OpCase {
  std::string name;
  Shape input_shape;
  double lo;
  double hi;
  // Builds the op applied to x (plus any fixed operands drawn from rng).
  std::function<Var(Graph&, Var, std::mt19937_64&)> build;
};

std::vector<OpCase> op_cases() {
  return {
      {"add", {2, 3}, -2, 2,
       [](Graph& g, Var x, std::mt19937_64& r) {
         return add(x, g.constant(Tensor({2, 3}, uniform_values(r, 6, -1, 1))));
       }},
      {"add_scalar_broadcast", {4}, -2, 2,
       [](Graph& g, Var x, std::mt19937_64&) { return add(x, mean(x)); }},
      {"sub", {3}, -2, 2,
       [](Graph& g, Var x, std::mt19937_64& r) {
         return sub(g.constant(Tensor::vector(uniform_values(r, 3, -1, 1))), x);
       }},
      {"mul_self", {5}, -2, 2, [](Graph&, Var x, std::mt19937_64&) { return mul(x, x); }},
      {"matmul_left", {2, 3}, -1, 1,
       [](Graph& g, Var x, std::mt19937_64& r) {
         return matmul(x, g.constant(Tensor({3, 2}, uniform_values(r, 6, -1, 1))));
       }},
      {"matmul_right", {3}, -1, 1,
       [](Graph& g, Var x, std::mt19937_64& r) {
         return matmul(g.constant(Tensor({2, 3}, uniform_values(r, 6, -1, 1))), x);
       }},
      {"matmul_dot", {4}, -1, 1, [](Graph&, Var x, std::mt19937_64&) { return matmul(x, x); }},
      {"scale", {3}, -2, 2, [](Graph&, Var x, std::mt19937_64&) { return scale(x, -1.7); }},
      {"concat", {1, 2}, -2, 2,
       [](Graph& g, Var x, std::mt19937_64& r) {
         std::vector<Var> parts{x, g.constant(Tensor({1, 3}, uniform_values(r, 3, -1, 1))), x};
         return concat(parts);
       }},
      {"gather", {4, 2}, -2, 2,
       [](Graph&, Var x, std::mt19937_64&) {
         std::vector<std::size_t> ids{2, 0, 2, 3};
         return gather(x, ids);
       }},
      {"sigmoid", {4}, -4, 4, [](Graph&, Var x, std::mt19937_64&) { return sigmoid(x); }},
      {"tanh", {4}, -3, 3, [](Graph&, Var x, std::mt19937_64&) { return tanh(x); }},
      {"exp", {4}, -2, 2, [](Graph&, Var x, std::mt19937_64&) { return exp(x); }},
      {"sqrt", {4}, 0.2, 4, [](Graph&, Var x, std::mt19937_64&) { return sqrt(x); }},
      {"mean", {2, 3}, -2, 2, [](Graph&, Var x, std::mt19937_64&) { return mean(x); }},
      {"sum", {2, 3}, -2, 2, [](Graph&, Var x, std::mt19937_64&) { return sum(x); }},
      {"softmax", {5}, -3, 3, [](Graph&, Var x, std::mt19937_64&) { return softmax(x); }},
  };
}

TEST(AutodiffOps, TanhOfZerosIsZeros) {
  Graph g;
  auto y = tanh(g.constant(Tensor::zeros({4})));
  for (double v : y.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(AutodiffOps, SoftmaxOfEqualScoresIsUniform) {
  Graph g;
  auto y = softmax(g.constant(Tensor::vector({0, 0, 0})));
  for (double v : y.value().values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(AutodiffOps, MatmulOfOnes) {
  Graph g;
  auto y = matmul(g.constant(Tensor::filled({2, 3}, 1.0)), g.constant(Tensor::filled({3, 1}, 1.0)));
  EXPECT_EQ(y.shape(), (Shape{2, 1}));
  EXPECT_EQ(y.value()[0], 3.0);
  EXPECT_EQ(y.value()[1], 3.0);
}

TEST(AutodiffOps, ConcatJoinsLastAxis) {
  Graph g;
  std::vector<Var> parts{g.constant(Tensor::matrix(2, 1, {1, 2})),
                         g.constant(Tensor::matrix(2, 2, {3, 4, 5, 6}))};
  auto y = concat(parts);
  EXPECT_EQ(y.shape(), (Shape{2, 3}));
  EXPECT_EQ(std::vector<double>(y.value().values().begin(), y.value().values().end()),
            (std::vector<double>{1, 3, 4, 2, 5, 6}));
}

TEST(AutodiffOps, GatherSelectsRows) {
  Graph g;
  std::vector<std::size_t> ids{2, 0};
  auto y = gather(g.constant(Tensor::matrix(3, 2, {0, 1, 10, 11, 20, 21})), ids);
  EXPECT_EQ(y.shape(), (Shape{2, 2}));
  EXPECT_EQ(y.value()[0], 20.0);
  EXPECT_EQ(y.value()[3], 1.0);
}

TEST(AutodiffOps, SigmoidIsStableAtExtremes) {
  Graph g;
  auto y = sigmoid(g.constant(Tensor::vector({-800, 0, 800})));
  EXPECT_EQ(y.value()[0], 0.0);
  EXPECT_EQ(y.value()[1], 0.5);
  EXPECT_EQ(y.value()[2], 1.0);
  EXPECT_TRUE(y.value().all_finite());
}

TEST(AutodiffErrors, ShapeMismatchNamesBothShapes) {
  Graph g;
  auto a = g.constant(Tensor::zeros({2, 3}));
  auto b = g.constant(Tensor::zeros({3}));
  try {
    add(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("[2,3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[3]"), std::string::npos) << msg;
  }
  EXPECT_THROW(matmul(g.constant(Tensor::zeros({2, 3})), g.constant(Tensor::zeros({2, 3}))),
               ShapeError);
  EXPECT_THROW(softmax(a), ShapeError);
}

TEST(AutodiffErrors, SqrtOfNegativeRejected) {
  Graph g;
  EXPECT_THROW(sqrt(g.constant(Tensor::vector({1.0, -0.5}))), std::domain_error);
}

TEST(AutodiffErrors, NonScalarLossRejected) {
  Graph g;
  Tensor x = Tensor::vector({1, 2});
  x.set_requires_grad(true);
  auto v = g.parameter(x);
  EXPECT_THROW(g.backward(mul(v, v)), ShapeError);
}

TEST(AutodiffBackward, SquareAtThree) {
  Graph g;
  Tensor x = Tensor::scalar(3.0);
  x.set_requires_grad(true);
  auto v = g.parameter(x);
  g.backward(mul(v, v));
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(AutodiffBackward, MeanSplitsEvenly) {
  Graph g;
  Tensor x = Tensor::vector({4.0, -1.0});
  x.set_requires_grad(true);
  g.backward(mean(g.parameter(x)));
  EXPECT_EQ(x.grad()[0], 0.5);
  EXPECT_EQ(x.grad()[1], 0.5);
}

TEST(AutodiffBackward, AbsSubgradient) {
  Tensor x = Tensor::vector({-2.0, 0.0, 3.0});
  x.set_requires_grad(true);
  Graph g;
  g.backward(sum(abs(g.parameter(x))));
  EXPECT_EQ(x.grad()[0], -1.0);
  EXPECT_EQ(x.grad()[1], 0.0);
  EXPECT_EQ(x.grad()[2], 1.0);
}

TEST(AutodiffBackward, ConstantsReceiveNoGradient) {
  Graph g;
  Tensor x = Tensor::vector({1.0, 2.0});
  auto c = g.reference(x);
  auto y = sum(mul(c, c));
  EXPECT_FALSE(y.requires_grad());
  EXPECT_FALSE(x.has_grad());
}

TEST(AutodiffBackward, GradientsAccumulateAcrossBackwardCalls) {
  Tensor x = Tensor::scalar(2.0);
  x.set_requires_grad(true);
  for (int i = 0; i < 2; ++i) {
    Graph g;
    auto v = g.parameter(x);
    g.backward(mul(v, v));
  }
  EXPECT_EQ(x.grad()[0], 8.0);
  x.zero_grad();
  EXPECT_EQ(x.grad()[0], 0.0);
}

// grad through two paths must equal the sum of the grads obtained by feeding
// two independent copies of the variable.
TEST(AutodiffProperties, FanOutMatchesDuplicatedVariables) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto vals = uniform_values(rng, 4, -2, 2);
    auto w = uniform_values(rng, 4, -1, 1);

    Tensor shared = Tensor::vector(vals);
    shared.set_requires_grad(true);
    {
      Graph g;
      auto x = g.parameter(shared);
      auto path1 = sum(mul(tanh(x), g.constant(Tensor::vector(w))));
      auto path2 = sum(exp(scale(x, 0.5)));
      g.backward(add(path1, path2));
    }

    Tensor a = Tensor::vector(vals);
    Tensor b = Tensor::vector(vals);
    a.set_requires_grad(true);
    b.set_requires_grad(true);
    {
      Graph g;
      auto xa = g.parameter(a);
      auto xb = g.parameter(b);
      auto path1 = sum(mul(tanh(xa), g.constant(Tensor::vector(w))));
      auto path2 = sum(exp(scale(xb, 0.5)));
      g.backward(add(path1, path2));
    }
    for (std::size_t i = 0; i < vals.size(); ++i) {
      EXPECT_NEAR(shared.grad()[i], a.grad()[i] + b.grad()[i], 1e-14);
    }
  }
}

TEST(AutodiffProperties, ReplayIsBitIdentical) {
  std::mt19937_64 rng(5);
  auto vals = uniform_values(rng, 6, -2, 2);
  auto run = [&] {
    Tensor x({2, 3}, vals);
    x.set_requires_grad(true);
    Graph g;
    auto v = g.parameter(x);
    auto h = tanh(matmul(v, g.constant(Tensor({3, 2}, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6}))));
    std::vector<std::size_t> first{0};
    auto s = softmax(gather(sum(h) * h, first));
    auto loss = add(sum(sqrt(exp(s))), sum(abs(v)));
    g.backward(loss);
    std::vector<double> out(loss.value().values().begin(), loss.value().values().end());
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    return out;
  };
  auto first = run();
  auto second = run();
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i], second[i]);
}

TEST(AutodiffProperties, GraphRecordsInputsBeforeOutputs) {
  Graph g;
  auto x = g.constant(Tensor::vector({1, 2}));
  auto y = tanh(x);
  auto z = add(y, x);
  EXPECT_LT(x.index, y.index);
  EXPECT_LT(y.index, z.index);
  EXPECT_EQ(g.size(), 3u);
}

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, PassesAtRandomPoints) {
  const auto& c = GetParam();
  std::mt19937_64 rng(std::hash<std::string>{}(c.name) & 0xffff);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor point(c.input_shape, uniform_values(rng, shape_numel(c.input_shape), c.lo, c.hi));
    // Fixed operands are drawn once per point so f is a deterministic function.
    std::uint64_t op_seed = rng();
    std::vector<double> w;
    ScalarFn f = [&](Graph& g, Var x) {
      std::mt19937_64 op_rng(op_seed);
      Var y = c.build(g, x, op_rng);
      if (w.size() != y.numel()) w = uniform_values(op_rng, y.numel(), -1, 1);
      return weighted_sum(g, y, w);
    };
    auto report = gradient_check(f, point, kEps, kTol);
    ASSERT_FALSE(report.inconclusive) << c.name << " trial " << trial;
    EXPECT_TRUE(report.passed) << c.name << " trial " << trial << " max rel err "
                               << report.max_rel_error;
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(OpGradientAbs, PassesAwayFromKink) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor point = Tensor::vector(nonzero_values(rng, 5));
    auto w = uniform_values(rng, 5, -1, 1);
    ScalarFn f = [&](Graph& g, Var x) { return weighted_sum(g, abs(x), w); };
    auto report = gradient_check(f, point, kEps, kTol);
    EXPECT_TRUE(report.passed) << "trial " << trial << " max rel err " << report.max_rel_error;
  }
}

INSTANTIATE_TEST_SUITE_P(ClosedOpSet, OpGradient, ::testing::ValuesIn(op_cases()),
                         [](const auto& info) { return info.param.name; });

TEST(GradientCheck, SumOfSquares) {
  ScalarFn f = [](Graph&, Var x) { return sum(mul(x, x)); };
  auto report = gradient_check(f, Tensor::vector({1, 2, 3}), 1e-5, 1e-4);
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.max_rel_error, 1e-4);
  ASSERT_EQ(report.analytic.size(), 3u);
  EXPECT_DOUBLE_EQ(report.analytic[2], 6.0);
}

TEST(GradientCheck, ConstantFunctionHasZeroGradients) {
  ScalarFn f = [](Graph& g, Var x) { return add(sum(scale(x, 0.0)), g.constant(Tensor::scalar(4))); };
  auto report = gradient_check(f, Tensor::vector({1, -2}), 1e-5, 1e-4);
  EXPECT_TRUE(report.passed);
  for (double v : report.analytic) EXPECT_EQ(v, 0.0);
  for (double v : report.numeric) EXPECT_EQ(v, 0.0);
}

TEST(GradientCheck, NonFiniteIsInconclusive) {
  ScalarFn f = [](Graph&, Var x) { return sum(exp(scale(x, 1000.0))); };
  auto report = gradient_check(f, Tensor::vector({1.0}), 1e-5, 1e-4);
  EXPECT_TRUE(report.inconclusive);
  EXPECT_FALSE(report.passed);
}

TEST(GradientCheck, DetectsWrongGradient) {
  // A deliberately broken op: forward is x^2, backward claims 3x.
  ScalarFn f = [](Graph& g, Var x) {
    Tensor out = x.value();
    for (auto& v : out.values()) v *= v;
    std::vector<Var> in{x};
    Var y = g.record(std::move(out), in, [](const BackwardContext& ctx) {
      const Tensor& a = *ctx.inputs[0];
      for (std::size_t i = 0; i < a.numel(); ++i) ctx.input_grads[0][i] += ctx.grad_out[i] * 3 * a[i];
    });
    return sum(y);
  };
  auto report = gradient_check(f, Tensor::vector({1.0, 2.0}), 1e-5, 1e-4);
  EXPECT_FALSE(report.passed);
  EXPECT_FALSE(report.inconclusive);
}

}  // namespace
}  // namespace dynloss::ad
