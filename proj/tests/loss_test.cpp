/*
 * Copyright 2026 The kmc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kmc/loss.hpp"

namespace {

using kmc::Loss;
using kmc::Vector;
namespace losses = kmc::losses;

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

TEST(BuiltinLosses, Values) {
  EXPECT_EQ(losses::linear()(1, 0.25), 0.75);
  EXPECT_EQ(losses::linear()(-1, 0.25), 1.25);
  EXPECT_EQ(losses::zero_one()(1, 0.1), 0.0);
  EXPECT_EQ(losses::zero_one()(1, -0.1), 1.0);
  EXPECT_EQ(losses::zero_one()(1, 0.0), 1.0);
  EXPECT_EQ(losses::zero_one()(-1, 0.0), 1.0);
  EXPECT_EQ(losses::hinge()(1, 0.5), 0.5);
  EXPECT_EQ(losses::hinge()(-1, -2.0), 0.0);
  EXPECT_NEAR(losses::logistic()(1, 2.0), 0.1269280110429725, 1e-16);
  EXPECT_NEAR(losses::logistic()(1, 0.5), 0.4740769841801067, 1e-16);
  EXPECT_TRUE(std::isfinite(losses::logistic()(1, -800.0)));
  EXPECT_EQ(losses::margin(0.3)(1, 0.2), 1.0);
  EXPECT_EQ(losses::margin(0.3)(1, 0.3), 0.0);
  EXPECT_EQ(losses::margin(0.0)(1, 0.0), 1.0);
}

TEST(BuiltinLosses, DeclaredCurvature) {
  EXPECT_EQ(losses::linear().curvature(), kmc::Curvature::affine);
  EXPECT_TRUE(losses::hinge().convex());
  EXPECT_TRUE(losses::logistic().convex());
  EXPECT_FALSE(losses::zero_one().convex());
}

TEST(BuiltinLosses, ConvexFlagSpotCheckedByMidpoints) {
  const kmc::EvaluationGrid grid;
  for (const auto& loss : losses::builtins()) {
    if (!loss.convex()) continue;
    for (int y : {1, -1})
      for (std::size_t i = 0; i + 2 < grid.values().size(); i += 7) {
        const double a = grid.values()[i], b = grid.values()[i + 2];
        EXPECT_LE(loss(y, 0.5 * (a + b)), 0.5 * (loss(y, a) + loss(y, b)) + 1e-12) << loss.name();
      }
  }
}

TEST(Risk, Examples) {
  kmc::DiscreteDistribution p({{vec({1}), 1}, {vec({2}), -1}}, {0.4, 0.6});
  EXPECT_EQ(kmc::risk(losses::linear(), p, [](const Vector&) { return 0.0; }), 1.0);
  EXPECT_EQ(kmc::risk(losses::zero_one(), p, [](const Vector& x) { return x[0] < 1.5 ? 1.0 : -1.0; }), 0.0);
  kmc::DiscreteDistribution q({{vec({0}), 1}, {vec({0}), -1}}, {0.75, 0.25});
  EXPECT_EQ(kmc::risk(losses::linear(), q, [](const Vector&) { return 1.0; }), 0.5);
}

TEST(EmpiricalRisk, Examples) {
  kmc::LabeledSample one({vec({1})}, {1});
  EXPECT_EQ(kmc::empirical_risk(losses::linear(), one, [](const Vector&) { return 1.0; }), 0.0);
  EXPECT_EQ(kmc::empirical_risk(losses::hinge(), one, [](const Vector&) { return 0.5; }), 0.5);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<Vector> xs;
    std::vector<int> ys;
    for (int i = 0; i < 7; ++i) {
      xs.push_back(vec({u(rng)}));
      ys.push_back(u(rng) > 0 ? 1 : -1);
    }
    kmc::LabeledSample s(xs, ys);
    auto f = [](const Vector& x) { return std::sin(3 * x[0]); };
    for (const auto& loss : losses::builtins())
      EXPECT_NEAR(kmc::empirical_risk(loss, s, f), kmc::risk(loss, kmc::DiscreteDistribution::empirical(s), f),
                  1e-12);
  }
}

TEST(CorrectSln, Examples) {
  const kmc::EvaluationGrid grid;
  for (const auto& loss : losses::builtins()) {
    const auto same = kmc::correct_sln(loss, 0.0);
    for (int y : {1, -1})
      for (double v : grid.values()) ASSERT_EQ(same(y, v), loss(y, v));
  }
  const auto c = kmc::correct_sln(losses::linear(), 0.25);
  for (int y : {1, -1})
    for (double v : grid.values()) ASSERT_NEAR(c(y, v), 1.0 - 2.0 * y * v, 1e-12);
  EXPECT_THROW(kmc::correct_sln(losses::linear(), 0.5), kmc::InputError);
}

TEST(CorrectSln, Unbiased) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> v(-3, 3), u(0, 1);
  for (const auto& loss : losses::builtins())
    for (double sigma : {0.1, 0.25, 0.4}) {
      const auto corrected = kmc::correct_sln(loss, sigma);
      for (int t = 0; t < 100; ++t) {
        const double q = u(rng);
        kmc::ScoreDistribution d{{v(rng), v(rng)}, {u(rng) < 0.5 ? 1 : -1, u(rng) < 0.5 ? 1 : -1}, {q, 1 - q}};
        ASSERT_NEAR(d.flipped(sigma).expected(corrected), d.expected(loss), 1e-12) << loss.name();
      }
    }
}

TEST(CorrectCc, Examples) {
  const kmc::EvaluationGrid grid;
  const auto a = kmc::correct_cc(losses::hinge(), 0.2, 0.2), b = kmc::correct_sln(losses::hinge(), 0.2);
  const auto id = kmc::correct_cc(losses::hinge(), 0.0, 0.0);
  for (int y : {1, -1})
    for (double v : grid.values()) {
      ASSERT_NEAR(a(y, v), b(y, v), 1e-12);
      ASSERT_EQ(id(y, v), losses::hinge()(y, v));
    }
  // y=+1: 1 - 2v; y=-1: 1 + 4v/3.
  const auto c = kmc::correct_cc(losses::linear(), 0.1, 0.3);
  EXPECT_NEAR(c(1, -1), 3.0, 1e-12);
  EXPECT_NEAR(c(1, 0), 1.0, 1e-12);
  EXPECT_NEAR(c(1, 1), -1.0, 1e-12);
  EXPECT_NEAR(c(-1, -1), -1.0 / 3.0, 1e-12);
  EXPECT_NEAR(c(-1, 0), 1.0, 1e-12);
  EXPECT_NEAR(c(-1, 1), 7.0 / 3.0, 1e-12);
  EXPECT_THROW(kmc::correct_cc(losses::linear(), 0.6, 0.4), kmc::InputError);
}

TEST(CorrectCc, UnbiasedUnderClassConditionalFlips) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> v(-3, 3), u(0, 1);
  const double sn = 0.15, sp = 0.35;
  for (const auto& loss : losses::builtins()) {
    const auto corrected = kmc::correct_cc(loss, sn, sp);
    for (int t = 0; t < 100; ++t) {
      const double score = v(rng);
      const int y = u(rng) < 0.5 ? 1 : -1;
      const double s_y = y == 1 ? sp : sn;
      const double noisy = (1 - s_y) * corrected(y, score) + s_y * corrected(-y, score);
      ASSERT_NEAR(noisy, loss(y, score), 1e-12) << loss.name();
    }
  }
}

TEST(ParseLoss, Names) {
  EXPECT_EQ(kmc::parse_loss("linear").name(), "linear");
  EXPECT_EQ(kmc::parse_loss("zero-one").name(), "zero-one");
  EXPECT_EQ(kmc::parse_loss("margin:0.5")(1, 0.4), 1.0);
  const auto s = kmc::parse_loss("sln-corrected:linear:0.25");
  EXPECT_NEAR(s(1, 1.0), -1.0, 1e-12);
  const auto nested = kmc::parse_loss("cc-corrected:sln-corrected:hinge:0.1:0.1:0.2");
  const auto direct = kmc::correct_cc(kmc::correct_sln(losses::hinge(), 0.1), 0.1, 0.2);
  EXPECT_EQ(nested(1, 0.3), direct(1, 0.3));
  EXPECT_THROW(kmc::parse_loss("square"), kmc::InputError);
  EXPECT_THROW(kmc::parse_loss("margin:x"), kmc::InputError);
  EXPECT_THROW(kmc::parse_loss("sln-corrected:linear"), kmc::InputError);
}

TEST(RobustnessCheck, Classification) {
  const auto lin = kmc::sln_robustness_check(losses::linear());
  EXPECT_TRUE(lin.is_robust());
  EXPECT_EQ(*lin.constant, 2.0);
  EXPECT_EQ(kmc::sln_robustness_check(losses::hinge()).verdict, kmc::RobustnessVerdict::not_robust);
  EXPECT_EQ(kmc::sln_robustness_check(losses::logistic()).verdict, kmc::RobustnessVerdict::not_robust);
  // Hinge looks robust on a grid that stays inside [-1, 1].
  EXPECT_TRUE(kmc::sln_robustness_check(losses::hinge(), kmc::EvaluationGrid(1.0, 0.01)).is_robust());
  const Loss blind("blind", [](int, double v) { return v * v; }, kmc::Curvature::convex);
  EXPECT_EQ(kmc::sln_robustness_check(blind).verdict, kmc::RobustnessVerdict::degenerate);
}

TEST(RobustnessCheck, ZeroOneAbstentionBreaksConstancy) {
  // l(1,v) + l(-1,v) is 1 for v != 0 and 2 at v = 0 under the abstention
  // convention, so only grids that avoid 0 see a constant sum.
  const auto on_grid = kmc::sln_robustness_check(losses::zero_one());
  EXPECT_EQ(on_grid.verdict, kmc::RobustnessVerdict::not_robust);
  EXPECT_EQ(on_grid.max_deviation, 1.0);
  EXPECT_EQ(losses::zero_one()(1, 0.0) + losses::zero_one()(-1, 0.0), 2.0);
  for (double v : kmc::EvaluationGrid().values())
    if (v != 0.0) ASSERT_EQ(losses::zero_one()(1, v) + losses::zero_one()(-1, v), 1.0);
}

TEST(RobustnessCheck, ConvexRobustLossesAreLinearInV) {
  const kmc::EvaluationGrid grid;
  std::vector<Loss> candidates = losses::builtins();
  candidates.push_back(Loss("shifted-linear", [](int y, double v) { return 3.0 - 0.5 * y * v + (y > 0 ? 1 : 0); },
                            kmc::Curvature::affine));
  for (const auto& loss : candidates) {
    if (!loss.convex() || !kmc::sln_robustness_check(loss, grid).is_robust()) continue;
    double slope[2];
    for (int k = 0; k < 2; ++k) {
      const int y = k == 0 ? 1 : -1;
      double mv = 0, ml = 0, svv = 0, svl = 0;
      const auto& vs = grid.values();
      for (double v : vs) {
        mv += v;
        ml += loss(y, v);
      }
      mv /= vs.size();
      ml /= vs.size();
      for (double v : vs) {
        svv += (v - mv) * (v - mv);
        svl += (v - mv) * (loss(y, v) - ml);
      }
      slope[k] = svl / svv;
    }
    EXPECT_NEAR(slope[0], -slope[1], 1e-9) << loss.name();
  }
}

TEST(OrderEquivalence, Fits) {
  const auto self = kmc::order_equivalence_fit(losses::hinge(), losses::hinge());
  EXPECT_NEAR(self.alpha, 1.0, 1e-12);
  EXPECT_NEAR(self.beta, 0.0, 1e-12);
  EXPECT_LE(self.residual, 1e-12);
  EXPECT_TRUE(self.order_equivalent());

  const auto lin = kmc::order_equivalence_fit(losses::linear(), kmc::correct_sln(losses::linear(), 0.25));
  EXPECT_NEAR(lin.alpha, 2.0, 1e-9);
  EXPECT_NEAR(lin.beta, -1.0, 1e-9);
  EXPECT_TRUE(lin.order_equivalent());

  const auto hin = kmc::order_equivalence_fit(losses::hinge(), kmc::correct_sln(losses::hinge(), 0.25));
  EXPECT_GT(hin.residual, 1e-3);
  EXPECT_FALSE(hin.order_equivalent());

  const Loss flat("flat", [](int, double) { return 1.0; }, kmc::Curvature::affine);
  EXPECT_FALSE(kmc::order_equivalence_fit(flat, losses::linear()).fittable);
}

TEST(CcRatio, Examples) {
  const auto sym = kmc::cc_ratio_check(losses::linear(), 0.2, 0.2);
  EXPECT_TRUE(sym.holds);
  EXPECT_NEAR(*sym.constant, 0.4, 1e-12);
  ASSERT_TRUE(sym.correction_fit.has_value());
  EXPECT_TRUE(sym.correction_fit->order_equivalent());
  EXPECT_FALSE(kmc::cc_ratio_check(losses::linear(), 0.1, 0.3).holds);
  EXPECT_FALSE(kmc::cc_ratio_check(losses::zero_one(), 0.1, 0.3).holds);
}

TEST(BalancedError, Examples) {
  kmc::InstanceDistribution pos({vec({1})}, {1.0}), neg({vec({-1})}, {1.0});
  EXPECT_EQ(kmc::balanced_error(losses::linear(), pos, neg, [](const Vector&) { return 0.0; }), 1.0);
  EXPECT_EQ(kmc::balanced_error(losses::zero_one(), pos, neg, [](const Vector& x) { return x[0]; }), 0.0);
  EXPECT_EQ(kmc::balanced_error(losses::linear(), pos, neg, [](const Vector& x) { return 0.5 * x[0]; }), 0.5);
}

TEST(LossProperties, Surrogacy) {
  for (int y : {1, -1})
    for (int k = -1000; k <= 1000; ++k) {
      const double v = k / 1000.0;
      ASSERT_LE(losses::zero_one()(y, v), losses::linear()(y, v));
    }
}

}  // namespace
