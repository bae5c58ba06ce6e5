/* Copyright 2026 The placement-opt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <cmath>

#include <gtest/gtest.h>

#include "placement/error.h"
#include "placement/nn.h"

namespace placement::nn {
namespace {

DenseNet Identity(int n, Activation act) {
  DenseNet net({n, n}, {act});
  net.layer(0).weight = Eigen::MatrixXd::Identity(n, n);
  return net;
}

TEST(Dense, IdentityLayer) {
  Eigen::VectorXd x(3);
  x << 1.5, -2.0, 0.25;
  EXPECT_EQ(Identity(3, Activation::kIdentity).Forward(x), x);
}

TEST(Dense, Relu) {
  Eigen::VectorXd x(2);
  x << -1.0, 2.0;
  Eigen::VectorXd want(2);
  want << 0.0, 2.0;
  EXPECT_EQ(Identity(2, Activation::kRelu).Forward(x), want);
}

TEST(Dense, ShapeMismatch) {
  EXPECT_THROW(Identity(3, Activation::kRelu).Forward(Eigen::VectorXd(2)),
               Error);
}

// Scalar loops as an independent reference for the matrix code.
TEST(Dense, TwoLayerMatchesScalarLoops) {
  Rng rng(0);
  const DenseNet net =
      DenseNet::Init({4, 5, 3}, {Activation::kRelu, Activation::kIdentity}, rng);
  std::vector<double> h(5), y(3);
  for (int i = 0; i < 5; ++i) {
    double s = net.layer(0).bias(i);
    for (int j = 0; j < 4; ++j) s += net.layer(0).weight(i, j) * 1.0;
    h[i] = s > 0 ? s : 0.0;
  }
  for (int i = 0; i < 3; ++i) {
    double s = net.layer(1).bias(i);
    for (int j = 0; j < 5; ++j) s += net.layer(1).weight(i, j) * h[j];
    y[i] = s;
  }
  const Eigen::VectorXd out = net.Forward(Eigen::VectorXd(Eigen::VectorXd::Ones(4)));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(out(i), y[i], 1e-14);
}

TEST(Dense, GlorotBounds) {
  Rng rng(5);
  const DenseNet net = DenseNet::Init({10, 30}, {Activation::kRelu}, rng);
  const double bound = std::sqrt(6.0 / 40.0);
  EXPECT_LE(net.layer(0).weight.cwiseAbs().maxCoeff(), bound);
  EXPECT_EQ(net.layer(0).bias.norm(), 0.0);
  EXPECT_GT(net.layer(0).weight.cwiseAbs().maxCoeff(), 0.5 * bound);
}

TEST(Dense, LinearGradientIsOuterProduct) {
  DenseNet net({3, 2}, {Activation::kIdentity});
  net.layer(0).weight << 1, 2, 3, 4, 5, 6;
  Eigen::VectorXd x(3);
  x << 0.5, -1.0, 2.0;
  DenseTape tape;
  net.Forward(x, &tape);
  Eigen::VectorXd gy(2);
  gy << 1.0, -2.0;
  DenseNet grads = net.ZerosLike();
  const Eigen::MatrixXd gx = net.Backward(tape, gy, grads);
  EXPECT_TRUE(grads.layer(0).weight.isApprox(gy * x.transpose()));
  EXPECT_TRUE(grads.layer(0).bias.isApprox(gy));
  EXPECT_TRUE(gx.isApprox(net.layer(0).weight.transpose() * gy));
}

TEST(Dense, ReluBlocksNegativeUnits) {
  DenseNet net = Identity(2, Activation::kRelu);
  Eigen::VectorXd x(2);
  x << -1.0, 0.0;
  DenseTape tape;
  net.Forward(x, &tape);
  DenseNet grads = net.ZerosLike();
  const Eigen::MatrixXd gx = net.Backward(tape, Eigen::VectorXd::Ones(2), grads);
  EXPECT_EQ(gx.norm(), 0.0);  // derivative at exactly 0 is 0
}

Eigen::VectorXd Flat(const DenseNet& net) {
  Eigen::VectorXd out(net.ParameterCount());
  Eigen::Index k = 0;
  net.VisitBuffers([&](const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out(k++) = p[i];
  });
  return out;
}

void Load(DenseNet& net, const Eigen::VectorXd& flat) {
  Eigen::Index k = 0;
  net.VisitBuffers([&](double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = flat(k++);
  });
}

TEST(Dense, ThreeLayerMatchesFiniteDifferences) {
  Rng rng(42);
  DenseNet net = DenseNet::Init(
      {4, 6, 5, 3},
      {Activation::kRelu, Activation::kRelu, Activation::kIdentity}, rng);
  for (int l = 0; l < 3; ++l) {
    for (Eigen::Index i = 0; i < net.layer(l).bias.size(); ++i) {
      net.layer(l).bias(i) = UniformReal(rng, -0.1, 0.3);
    }
  }
  Eigen::MatrixXd x(4, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = UniformReal(rng, -1, 1);
  Eigen::MatrixXd target(3, 3);
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    target(i) = UniformReal(rng, -1, 1);
  }
  auto loss = [&](const Eigen::VectorXd& p) {
    DenseNet copy = net;
    Load(copy, p);
    return 0.5 * (copy.Forward(x) - target).squaredNorm();
  };
  DenseTape tape;
  const Eigen::MatrixXd y = net.Forward(x, &tape);
  DenseNet grads = net.ZerosLike();
  net.Backward(tape, y - target, grads);
  const GradientCheck check =
      FiniteDifferenceCheck(loss, Flat(net), Flat(grads));
  EXPECT_LE(check.max_relative_error, 1e-4);
  EXPECT_GT(check.checked, 50);
}

TEST(Dense, JsonRoundTrip) {
  Rng rng(1);
  const DenseNet net =
      DenseNet::Init({3, 4, 2}, {Activation::kRelu, Activation::kIdentity}, rng);
  const DenseNet back = DenseNet::FromJson(net.ToJson());
  EXPECT_EQ(Flat(back), Flat(net));
  EXPECT_EQ(back.layer(0).activation, Activation::kRelu);
}

TEST(Softmax, Symmetric) {
  const Categorical c = Softmax(Eigen::VectorXd::Zero(2));
  EXPECT_DOUBLE_EQ(c.probs(0), 0.5);
  EXPECT_NEAR(c.entropy, std::log(2.0), 1e-15);
}

TEST(Softmax, Stable) {
  Eigen::VectorXd l(2);
  l << 1000.0, 0.0;
  const Categorical c = Softmax(l);
  EXPECT_NEAR(c.probs(0), 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(c.log_probs(1)));
  EXPECT_GE(c.entropy, 0.0);
  l << std::nan(""), 0.0;
  EXPECT_THROW(Softmax(l), Error);
}

TEST(Softmax, SumsToOne) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd l(5);
    for (int i = 0; i < 5; ++i) l(i) = UniformReal(rng, -30, 30);
    EXPECT_NEAR(Softmax(l).probs.sum(), 1.0, 1e-12);
  }
}

TEST(Softmax, SampleFrequencies) {
  Eigen::VectorXd l(3);
  l << 0.3, -0.5, 1.1;
  const Categorical c = Softmax(l);
  Rng rng(9);
  const int n = 100000;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < n; ++i) ++counts[SampleIndex(c.probs, rng)];
  for (int k = 0; k < 3; ++k) {
    const double p = c.probs(k);
    const double sigma = std::sqrt(n * p * (1 - p));
    EXPECT_NEAR(counts[k], n * p, 3 * sigma);
  }
  const SampledAction a = SoftmaxSample(l, rng);
  EXPECT_DOUBLE_EQ(a.log_prob, c.log_probs(a.action));
}

TEST(Softmax, ArgMaxTiesToLowestIndex) {
  Eigen::VectorXd p(3);
  p << 0.4, 0.4, 0.2;
  EXPECT_EQ(ArgMax(p), 0);
}

TEST(LossGradient, MatchesFiniteDifferences) {
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd l(4);
    for (int i = 0; i < 4; ++i) l(i) = UniformReal(rng, -2, 2);
    const int a = UniformInt(rng, 0, 3);
    const double adv = UniformReal(rng, -2, 2);
    const double beta = UniformReal(rng, 0, 0.5);
    auto loss = [&](const Eigen::VectorXd& z) {
      const Categorical c = Softmax(z);
      return -c.log_probs(a) * adv - beta * c.entropy;
    };
    const GradientCheck check = FiniteDifferenceCheck(
        loss, l, PolicyLossLogitGradient(Softmax(l), a, adv, beta));
    EXPECT_LE(check.max_relative_error, 1e-6);
  }
}

TEST(Adam, ZeroGradient) {
  AdamState s(AdamConfig{}, 3);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 1.5);
  AdamStep(p, Eigen::VectorXd::Zero(3), s);
  EXPECT_EQ(p, Eigen::VectorXd::Constant(3, 1.5));
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, FirstStepIsLearningRate) {
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  AdamState s(cfg, 1);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 3.0);
  AdamStep(p, g, s);
  // m_hat = g, v_hat = g^2, step = lr * g / (|g| + eps).
  EXPECT_NEAR(p(0), -0.01 * 3.0 / (3.0 + 1e-8), 1e-15);
  AdamStep(p, g, s, 0.5);
  EXPECT_NEAR(p(0), -0.01 * 3.0 / (3.0 + 1e-8) * 1.5, 1e-12);
}

TEST(Adam, ShapeMismatchAndRoundTrip) {
  AdamState s(AdamConfig{}, 2);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(AdamStep(p, Eigen::VectorXd::Zero(3), s), Error);
  Eigen::VectorXd q = Eigen::VectorXd::Ones(2);
  AdamStep(q, Eigen::VectorXd::Constant(2, 0.7), s);
  const AdamState back = AdamFromJson(AdamToJson(s));
  EXPECT_EQ(back.first_moment, s.first_moment);
  EXPECT_EQ(back.second_moment, s.second_moment);
  EXPECT_EQ(back.step, s.step);
}

TEST(FiniteDifference, Quadratic) {
  Eigen::VectorXd p(4);
  p << 1.0, -2.0, 0.5, 3.0;
  auto loss = [](const Eigen::VectorXd& x) { return 0.5 * x.squaredNorm(); };
  EXPECT_LE(FiniteDifferenceCheck(loss, p, p).max_relative_error, 1e-9);
  Eigen::VectorXd wrong = p;
  wrong(2) += 0.1;
  const GradientCheck bad = FiniteDifferenceCheck(loss, p, wrong);
  EXPECT_GT(bad.max_relative_error, 0.1);
  EXPECT_EQ(bad.worst_index, 2);
}

TEST(FiniteDifference, SkipsKinks) {
  // |x| at x = 0 has disagreeing one-sided slopes.
  Eigen::VectorXd p(2);
  p << 0.0, 1.0;
  auto loss = [](const Eigen::VectorXd& x) {
    return std::abs(x(0)) + x(1) * x(1);
  };
  Eigen::VectorXd g(2);
  g << 0.0, 2.0;
  const GradientCheck c = FiniteDifferenceCheck(loss, p, g);
  EXPECT_EQ(c.skipped_kinks, 1);
  EXPECT_LE(c.max_relative_error, 1e-8);
}

}  // namespace
}  // namespace placement::nn
