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

#include "kmc/lab.hpp"

namespace {

namespace lab = kmc::lab;
using kmc::DiscreteDistribution;
using kmc::KernelSpec;
using kmc::Vector;

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

// Two deterministic atoms on the horizontal axis; under the linear kernel
// w_P = (1, 0) and every atom has margin 1.
DiscreteDistribution two_atoms() { return {{{vec({1, 0}), 1}, {vec({-1, 0}), -1}}, {0.5, 0.5}}; }

TEST(ExperimentReport, Assertions) {
  lab::ExperimentReport r;
  r.expect_le("a", 1.0, 1.0, 0.0);
  r.expect_eq("b", 1.0 + 1e-13, 1.0, 1e-12);
  r.expect_ge("c", 0.9, 1.0, 0.05);
  EXPECT_FALSE(r.assertions[2].passed);
  EXPECT_FALSE(r.passed());
  lab::ExperimentReport s;
  s.expect_true("d", true);
  s.merge(r, "x: ");
  EXPECT_EQ(s.assertions.back().name, "x: c");
  const nlohmann::json j = s;
  EXPECT_EQ(j["assertions"].size(), 4u);
  EXPECT_EQ(j["assertions"][1]["relation"], "<=");
  EXPECT_FALSE(j["passed"].get<bool>());
}

TEST(FiniteFunctionClass, Validation) {
  EXPECT_THROW(lab::FiniteFunctionClass({vec({0})}, {}), kmc::InputError);
  EXPECT_THROW(lab::FiniteFunctionClass({vec({0}), vec({0})}, {{1, 2}}), kmc::InputError);
  EXPECT_THROW(lab::FiniteFunctionClass({vec({0})}, {{1, 2}}), kmc::InputError);
  EXPECT_THROW(lab::FiniteFunctionClass({vec({0})}, {{NAN}}), kmc::InputError);
  const lab::FiniteFunctionClass cls({vec({0}), vec({1})}, {{0.5, -0.5}});
  EXPECT_EQ(cls.score(0, vec({1})), -0.5);
  EXPECT_THROW(cls.score(0, vec({2})), kmc::InputError);
}

TEST(BruteForceMin, Examples) {
  const auto p = two_atoms();
  const lab::FiniteFunctionClass one(p.instances(), {{0.1, 0.2}});
  EXPECT_EQ(lab::brute_force_min(kmc::losses::linear(), p, one).index, 0u);

  const lab::FiniteFunctionClass tied(p.instances(), {{-1, 1}, {0.5, -0.5}, {0.5, -0.5}});
  const auto r = lab::brute_force_min(kmc::losses::zero_one(), p, tied);
  EXPECT_EQ(r.index, 1u);
  EXPECT_EQ(r.risk, 0.0);
  EXPECT_EQ(lab::argmin_set(r.risks, 0.0), (std::vector<std::size_t>{1, 2}));
}

TEST(BruteForceMin, BayesTableIsOptimalForZeroOne) {
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto rng = lab::detail::trial_rng(1, t);
    const auto p = lab::random_distribution(rng);
    const auto bayes = lab::bayes_classifier(p);
    auto cls = lab::random_function_class(p.instances(), 20, rng);
    std::vector<std::vector<double>> tables{bayes.table(0)};
    for (std::size_t k = 0; k < cls.size(); ++k) tables.push_back(cls.table(k));
    const auto r = lab::brute_force_min(kmc::losses::zero_one(), p, lab::FiniteFunctionClass(p.instances(), tables));
    EXPECT_EQ(r.risk, r.risks[0]);
  }
}

TEST(BruteForceMin, LinearLossNeverBeatsTheMeanNorm) {
  const auto k = KernelSpec::linear();
  for (std::uint64_t t = 0; t < 20; ++t) {
    auto rng = lab::detail::trial_rng(2, t);
    const auto p = lab::random_distribution(rng);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::vector<std::vector<double>> tables;
    for (int j = 0; j < 100; ++j) {
      const double a = angle(rng);
      const Vector w = vec({std::cos(a), std::sin(a)});
      std::vector<double> table;
      for (const auto& x : p.instances()) table.push_back(w.dot(x) / std::sqrt(2.0));
      tables.push_back(table);
    }
    // Instances lie in [-1, 1]^2, so dividing by sqrt(2) keeps |f| <= 1 and
    // corresponds to a vector of norm 1/sqrt(2) <= 1.
    const auto r = lab::brute_force_min(kmc::losses::linear(), p, lab::FiniteFunctionClass(p.instances(), tables));
    EXPECT_GE(r.risk, kmc::mean_norm(p, k).min_linear_loss - 1e-12);
  }
}

TEST(RandomGenerators, Shapes) {
  for (std::uint64_t t = 0; t < 100; ++t) {
    auto rng = lab::detail::trial_rng(3, t);
    const auto p = lab::random_distribution(rng);
    EXPECT_GE(p.size(), 2u);
    EXPECT_LE(p.size(), 6u);
    EXPECT_EQ(p.dim(), 2);
    const auto q = lab::random_instance_distribution(rng, 4);
    EXPECT_LE(q.size(), 4u);
  }
  auto a = lab::detail::trial_rng(5, 9), b = lab::detail::trial_rng(5, 9);
  EXPECT_EQ(a(), b());
}

TEST(SurrogateRegret, Examples) {
  const auto p = two_atoms();
  const auto bayes = lab::bayes_classifier(p);
  const auto same = lab::check_surrogate_regret(p, bayes.function(0));
  EXPECT_TRUE(same.passed());
  EXPECT_EQ(same.data["mis_regret"], 0.0);
  EXPECT_EQ(same.data["lin_regret"], 0.0);

  const auto negated = lab::check_surrogate_regret(p, [&](const Vector& x) { return -bayes.score(0, x); });
  EXPECT_TRUE(negated.passed());
  EXPECT_EQ(negated.data["mis_regret"], 1.0);
  EXPECT_EQ(negated.data["lin_regret"], 2.0);

  EXPECT_THROW(lab::check_surrogate_regret(p, [](const Vector&) { return 1.5; }), kmc::InputError);
  EXPECT_TRUE(lab::audit_surrogate_regret(200, 7).passed());
}

TEST(SlnImmunity, Examples) {
  const auto k = KernelSpec::gaussian(1.0);
  auto rng = lab::detail::trial_rng(4, 0);
  DiscreteDistribution p = lab::random_distribution(rng);
  while (kmc::mean_norm(p, k).norm < 1e-3) p = lab::random_distribution(rng);
  const auto r = lab::check_sln_immunity(p, {0.25, 1e-6}, k);
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.data["scaling_factors"][0].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(r.data["scaling_factors"][1].get<double>(), 1.0, 1e-5);

  const DiscreteDistribution zero({{vec({0.3, 0.3}), 1}, {vec({0.3, 0.3}), -1}}, {0.5, 0.5});
  const auto z = lab::check_sln_immunity(zero, {0.2}, k);
  EXPECT_TRUE(z.passed());
  EXPECT_EQ(z.data["clean_norm"], 0.0);
  EXPECT_THROW(lab::check_sln_immunity(p, {0.5}, k), kmc::InputError);
  EXPECT_THROW(lab::check_sln_immunity(p, {0.0}, k), kmc::InputError);
}

TEST(Contamination, Examples) {
  const auto k = KernelSpec::linear();
  const auto p = two_atoms();
  for (double sigma : {0.0, 0.3, 1.0}) {
    const auto r = lab::check_contamination(p, p, sigma, k);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.data["perturbation"], 0.0);
    EXPECT_EQ(r.data["risk_clean"], r.data["risk_contaminated"]);
  }

  // Gamma = 1 and ||w_P - w_Q|| <= 2, so sigma = 0.4 is safe for any Q.
  auto rng = lab::detail::trial_rng(5, 0);
  for (int t = 0; t < 20; ++t) {
    const auto q = lab::random_distribution(rng);
    const auto r = lab::check_contamination(p, q, 0.4, k);
    EXPECT_TRUE(r.data["hypothesis_holds"].get<bool>());
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.data["risk_clean"], r.data["risk_contaminated"]);
  }

  const auto adversarial = lab::check_contamination(p, p.label_flipped(), 0.9, k);
  EXPECT_FALSE(adversarial.data["hypothesis_holds"].get<bool>());
  EXPECT_EQ(adversarial.assertions.size(), 1u);
  EXPECT_TRUE(adversarial.passed());
  EXPECT_EQ(adversarial.data["risk_contaminated"], 1.0);
  EXPECT_THROW(lab::check_contamination(p, p, 1.5, k), kmc::InputError);
}

TEST(Contamination, MisclassifiedAtomsCanOnlyImprove) {
  // w_P = (0.89, 0) misclassifies the light atom at (0.1, 0).
  const auto k = KernelSpec::linear();
  const DiscreteDistribution p({{vec({1, 0}), 1}, {vec({-1, 0}), -1}, {vec({0.1, 0}), -1}}, {0.45, 0.45, 0.1});
  const DiscreteDistribution q({{vec({-1, 0}), 1}}, {1.0});
  const auto r = lab::check_contamination(p, q, 0.02, k);
  EXPECT_TRUE(r.data["hypothesis_holds"].get<bool>());
  EXPECT_TRUE(r.passed());
  EXPECT_LE(r.data["risk_contaminated"].get<double>(), r.data["risk_clean"].get<double>());
}

TEST(BerImmunity, Examples) {
  auto rng = lab::detail::trial_rng(6, 0);
  const auto pos = lab::random_instance_distribution(rng), neg = lab::random_instance_distribution(rng);
  std::vector<Vector> xs = pos.support();
  for (const auto& x : neg.support()) xs.push_back(x);
  const auto cls = lab::random_function_class(xs, 20, rng);

  const auto id = lab::check_ber_immunity(kmc::losses::linear(), pos, neg, 0.0, 0.0, cls);
  EXPECT_TRUE(id.passed());
  EXPECT_NEAR(id.data["measured_slope"].get<double>(), 1.0, 1e-10);
  EXPECT_NEAR(id.data["measured_intercept"].get<double>(), 0.0, 1e-10);

  const auto r = lab::check_ber_immunity(kmc::losses::linear(), pos, neg, 0.2, 0.1, cls);
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.data["measured_slope"].get<double>(), 0.7, 1e-10);
  EXPECT_NEAR(r.data["measured_intercept"].get<double>(), 0.3, 1e-10);

  EXPECT_THROW(lab::check_ber_immunity(kmc::losses::hinge(), pos, neg, 0.2, 0.1, cls), kmc::PreconditionError);
  EXPECT_TRUE(lab::audit_ber_immunity(kmc::losses::linear(), 50, 3).passed());
}

TEST(GhoshBound, Examples) {
  auto rng = lab::detail::trial_rng(7, 0);
  const auto p = lab::random_distribution(rng);
  const auto cls = lab::random_function_class(p.instances(), 30, rng);
  const auto none = lab::check_ghosh_bound(p, kmc::NoiseFunctionTable::constant(p.size(), 0.0),
                                           kmc::losses::linear(), cls);
  EXPECT_TRUE(none.passed());
  EXPECT_EQ(none.data["clean_index"], none.data["noisy_index"]);
  EXPECT_EQ(none.data["bound"], none.data["clean_min_risk"]);

  const auto sep = two_atoms();
  auto tables = lab::random_function_class(sep.instances(), 10, rng);
  std::vector<std::vector<double>> with_perfect{{0.3, 0.9}};
  for (std::size_t k = 0; k < tables.size(); ++k) with_perfect.push_back(tables.table(k));
  with_perfect.push_back({1.0, -1.0});
  const auto r = lab::check_ghosh_bound(sep, kmc::NoiseFunctionTable({{0, 0.4}, {1, 0.1}}), kmc::losses::linear(),
                                        lab::FiniteFunctionClass(sep.instances(), with_perfect));
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.data["noisy_minimizer_clean_risk"], 0.0);

  EXPECT_THROW(lab::check_ghosh_bound(p, kmc::NoiseFunctionTable::constant(p.size(), 0.1), kmc::losses::hinge(), cls),
               kmc::PreconditionError);
  EXPECT_TRUE(lab::audit_ghosh_bound(50, 2).passed());
}

TEST(LossAudits, UnbiasedCorrectionAndCharacterization) {
  EXPECT_TRUE(lab::audit_unbiased_correction(kmc::losses::builtins(), {0.1, 0.4}, 50, 1).passed());
  const auto c = lab::robustness_characterization();
  for (const auto& a : c.assertions) {
    if (a.name.rfind("zero-one", 0) == 0) continue;
    EXPECT_TRUE(a.passed) << a.name;
  }
  EXPECT_EQ(c.data["zero_one_deviating_scores"], nlohmann::json::array({0.0}));
}

TEST(OrderReversal, HingeWitness) {
  const kmc::ScoreDistribution q{{0.0}, {1}, {1.0}}, q_prime{{5.0}, {1}, {1.0}};
  const auto hinge = kmc::losses::hinge();
  EXPECT_LE(q_prime.expected(hinge), q.expected(hinge));
  EXPECT_GT(q_prime.flipped(0.25).expected(hinge), q.flipped(0.25).expected(hinge));

  const auto found = lab::find_order_reversal(hinge, 0.25, 1);
  ASSERT_TRUE(found.has_value());
  EXPECT_LE(found->q.expected(hinge), found->q_prime.expected(hinge));
  EXPECT_GT(found->q.flipped(0.25).expected(hinge), found->q_prime.flipped(0.25).expected(hinge));
  EXPECT_FALSE(lab::find_order_reversal(kmc::losses::linear(), 0.25, 1).has_value());
}

TEST(ArgminInvariance, LinearLossUnderSymmetricNoise) {
  for (std::uint64_t t = 0; t < 500; ++t) {
    auto rng = lab::detail::trial_rng(8, t);
    const auto p = lab::random_distribution(rng);
    const auto cls = lab::random_function_class(p.instances(), 25, rng);
    const auto clean = lab::argmin_set(lab::brute_force_min(kmc::losses::linear(), p, cls).risks, 1e-10);
    for (double sigma : {0.1, 0.3, 0.45}) {
      const auto noisy = lab::brute_force_min(kmc::losses::linear(), kmc::flip_symmetric(p, sigma), cls);
      ASSERT_EQ(lab::argmin_set(noisy.risks, 1e-10), clean) << t << " " << sigma;
    }
  }
}

TEST(LongServedio, DefaultSweep) {
  const auto r = lab::run_long_servedio();
  EXPECT_TRUE(r.passed());
  ASSERT_TRUE(r.data.contains("failing_sigma"));
  EXPECT_EQ(kmc::long_servedio(1.0 / 24).prob()[0], 0.5);
  for (const auto& row : r.data["sweep"]) {
    EXPECT_EQ(row["mean_mis"], 0.0);
    const double h = row["hinge_mis"].get<double>();
    EXPECT_TRUE(h == 0.0 || h == 0.5 || h == 0.25) << h;
  }
}

TEST(LongServedio, FailingSigmaShrinksWithGamma) {
  lab::LongServedioOptions o;
  o.sigmas.clear();
  for (int i = 1; i < 50; ++i) o.sigmas.push_back(i / 100.0);
  o.angle_step = 0.002;
  double prev = 1.0;
  for (double gamma : {1.0 / 12, 1.0 / 24, 1.0 / 48}) {
    o.gamma = gamma;
    const auto r = lab::run_long_servedio(o);
    ASSERT_TRUE(r.data.contains("failing_sigma")) << gamma;
    const double s = r.data["failing_sigma"].get<double>();
    EXPECT_LE(s, prev) << gamma;
    prev = s;
  }
}

TEST(Compression, CurveAndCsv) {
  const auto train = kmc::synth_blobs(300, 2, 4.0, 1), test = kmc::synth_blobs(300, 2, 4.0, 2);
  lab::CompressionOptions o;
  o.tolerances = {1e6};
  o.min_size = 1;
  const auto big = lab::run_compression_experiment(train, test, KernelSpec::gaussian(1.0), o);
  ASSERT_FALSE(big.data["curve"].empty());
  EXPECT_EQ(big.data["curve"][0]["fraction"], 1.0 / 300);

  o.tolerances = {0.01, 0.05};
  o.min_size = 10;
  o.accuracy_tolerance = 0.05;
  for (auto mode : {lab::CompressionMode::recursive, lab::CompressionMode::parallel}) {
    o.mode = mode;
    o.max_group_size = 100;
    const auto r = lab::run_compression_experiment(train, test, KernelSpec::gaussian(1.0), o);
    EXPECT_TRUE(r.passed());
    const auto csv = lab::curve_csv(r);
    EXPECT_EQ(csv.rfind("fraction,accuracy,herd_size,herd_error,tolerance,stage\n", 0), 0u);
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.data["curve"].size() + 1);
  }
}

TEST(Suites, DeterministicAndNamed) {
  EXPECT_EQ(lab::suite_names().size(), 9u);
  lab::SuiteOptions o{11, 2};
  const auto a = lab::run_suite("contamination", o), b = lab::run_suite("contamination", {11, 1});
  nlohmann::json ja = a, jb = b;
  ja.erase("runtime_seconds");
  jb.erase("runtime_seconds");
  EXPECT_EQ(ja, jb);
  EXPECT_TRUE(a.passed());
  EXPECT_THROW(lab::run_suite("nope", o), kmc::InputError);
}

}  // namespace
