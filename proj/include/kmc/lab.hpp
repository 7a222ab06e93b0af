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

// Brute-force oracles and experiment drivers for the robustness and
// approximation results: surrogate regret, symmetric-noise immunity,
// contamination, balanced-error immunity, the instance-dependent noise bound,
// the Long-Servedio construction and the herding compression curve.
//
// Audits run on exact DiscreteDistribution mixtures, so identities are
// asserted at 1e-10..1e-12. Random audits seed each trial from (seed, trial)
// and merge results in trial order, so reports do not depend on scheduling.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kmc/data.hpp"
#include "kmc/error.hpp"
#include "kmc/herding.hpp"
#include "kmc/kernel.hpp"
#include "kmc/loss.hpp"
#include "kmc/mean_classifier.hpp"
#include "kmc/parallel.hpp"

namespace kmc::lab {

// ---------------------------------------------------------------------------
// Reports

struct Assertion {
  std::string name;
  std::string relation;  // "<=", "==", ">="
  double expected = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct ExperimentReport {
  std::string name;
  nlohmann::json inputs = nlohmann::json::object();
  std::vector<Assertion> assertions;
  nlohmann::json data = nlohmann::json::object();
  double runtime_seconds = 0.0;

  bool passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
  }

  // measured <= expected + tol
  void expect_le(std::string what, double measured, double expected, double tol) {
    assertions.push_back({std::move(what), "<=", expected, measured, tol, measured <= expected + tol});
  }
  // |measured - expected| <= tol
  void expect_eq(std::string what, double measured, double expected, double tol) {
    assertions.push_back({std::move(what), "==", expected, measured, tol, std::abs(measured - expected) <= tol});
  }
  // measured >= expected - tol
  void expect_ge(std::string what, double measured, double expected, double tol) {
    assertions.push_back({std::move(what), ">=", expected, measured, tol, measured >= expected - tol});
  }
  void expect_true(std::string what, bool ok) {
    assertions.push_back({std::move(what), "==", 1.0, ok ? 1.0 : 0.0, 0.0, ok});
  }
  void merge(const ExperimentReport& other, const std::string& prefix) {
    for (auto a : other.assertions) {
      a.name = prefix + a.name;
      assertions.push_back(std::move(a));
    }
  }
};

inline void to_json(nlohmann::json& j, const Assertion& a) {
  j = {{"name", a.name},         {"relation", a.relation},   {"expected", a.expected},
       {"measured", a.measured}, {"tolerance", a.tolerance}, {"passed", a.passed}};
}

inline void to_json(nlohmann::json& j, const ExperimentReport& r) {
  j = {{"name", r.name},
       {"inputs", r.inputs},
       {"assertions", r.assertions},
       {"data", r.data},
       {"passed", r.passed()},
       {"runtime_seconds", r.runtime_seconds}};
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Finite function classes

// Candidate classifiers given as score tables over a fixed set of instances.
class FiniteFunctionClass {
 public:
  FiniteFunctionClass(std::vector<Vector> instances, std::vector<std::vector<double>> tables)
      : instances_(std::move(instances)), tables_(std::move(tables)) {
    if (tables_.empty()) throw InputError("function class must be non-empty");
    for (std::size_t i = 0; i < instances_.size(); ++i)
      if (!index_.emplace(kmc::detail::key_of(instances_[i]), i).second)
        throw InputError("function class instances must be distinct");
    for (const auto& t : tables_) {
      if (t.size() != instances_.size()) throw InputError("score table does not cover every instance");
      for (double v : t)
        if (!std::isfinite(v)) throw InputError("score tables must be finite");
    }
  }

  std::size_t size() const { return tables_.size(); }
  const std::vector<Vector>& instances() const { return instances_; }
  const std::vector<double>& table(std::size_t k) const { return tables_[k]; }

  double score(std::size_t k, const Vector& x) const {
    auto it = index_.find(kmc::detail::key_of(x));
    if (it == index_.end()) throw InputError("instance not covered by the function class");
    return tables_[k][it->second];
  }

  auto function(std::size_t k) const {
    return [this, k](const Vector& x) { return score(k, x); };
  }

 private:
  std::vector<Vector> instances_;
  std::vector<std::vector<double>> tables_;
  std::map<std::vector<double>, std::size_t> index_;
};

struct MinResult {
  std::size_t index = 0;
  double risk = 0.0;
  std::vector<double> risks;
};

// Exhaustive argmin over the class; ties go to the lowest index.
inline MinResult brute_force_min(const Loss& loss, const DiscreteDistribution& p,
                                 const FiniteFunctionClass& cls) {
  MinResult r;
  r.risks.reserve(cls.size());
  for (std::size_t k = 0; k < cls.size(); ++k) {
    r.risks.push_back(risk(loss, p, cls.function(k)));
    if (r.risks[k] < r.risks[r.index]) r.index = k;
  }
  r.risk = r.risks[r.index];
  return r;
}

// Indices whose value is within tol of the minimum.
inline std::vector<std::size_t> argmin_set(const std::vector<double>& values, double tol) {
  const double m = *std::min_element(values.begin(), values.end());
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (values[k] <= m + tol) out.push_back(k);
  return out;
}

// ---------------------------------------------------------------------------
// Random instances

// Support of 2..6 atoms in the plane over one to three distinct instances
// drawn from [-1, 1]^2, probabilities from a symmetric Dirichlet(1).
template <typename Rng>
DiscreteDistribution random_distribution(Rng& rng) {
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_int_distribution<int> n_inst(1, 3);
  std::uniform_int_distribution<int> which(0, 2);  // 0: both labels, 1: +1 only, 2: -1 only
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<LabeledPoint> atoms;
  while (atoms.size() < 2) {
    atoms.clear();
    const int k = n_inst(rng);
    for (int i = 0; i < k; ++i) {
      Vector x(2);
      x << coord(rng), coord(rng);
      const int w = which(rng);
      if (w != 2) atoms.push_back({x, 1});
      if (w != 1) atoms.push_back({x, -1});
    }
  }
  std::vector<double> prob;
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    prob.push_back(gamma(rng) + 1e-12);
    total += prob.back();
  }
  for (double& p : prob) p /= total;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < prob.size(); ++i) sum += prob[i];
  prob.back() = 1.0 - sum;
  return {std::move(atoms), std::move(prob)};
}

template <typename Rng>
InstanceDistribution random_instance_distribution(Rng& rng, int max_atoms = 4) {
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_int_distribution<int> count(1, max_atoms);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  const int k = count(rng);
  std::vector<Vector> xs;
  std::vector<double> prob;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    Vector x(2);
    x << coord(rng), coord(rng);
    xs.push_back(x);
    prob.push_back(gamma(rng) + 1e-12);
    total += prob.back();
  }
  for (double& p : prob) p /= total;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < prob.size(); ++i) sum += prob[i];
  prob.back() = 1.0 - sum;
  return {std::move(xs), std::move(prob)};
}

// Tables drawn uniformly from [-bound, bound].
template <typename Rng>
FiniteFunctionClass random_function_class(const std::vector<Vector>& instances, std::size_t size, Rng& rng,
                                          double bound = 1.0) {
  std::uniform_real_distribution<double> score(-bound, bound);
  std::vector<std::vector<double>> tables(size, std::vector<double>(instances.size()));
  for (auto& t : tables)
    for (double& v : t) v = score(rng);
  return {instances, std::move(tables)};
}

// ---------------------------------------------------------------------------
// Surrogate regret of the linear loss

// Bayes classifier f_P(x) = 1 if P(Y=1 | x) >= 1/2, else -1.
inline FiniteFunctionClass bayes_classifier(const DiscreteDistribution& p) {
  auto xs = p.instances();
  std::vector<double> table;
  for (const auto& x : xs) {
    double pos = 0.0, total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p.atom(i).x == x) {
        total += p.prob()[i];
        if (p.atom(i).y == 1) pos += p.prob()[i];
      }
    table.push_back(total > 0.0 && pos >= 0.5 * total ? 1.0 : -1.0);
  }
  return {std::move(xs), {std::move(table)}};
}

// l_mis(P,f) - l_mis(P,f_P) <= l_lin(P,f) - l_lin(P,f_P) for |f| <= 1.
template <typename Classifier>
ExperimentReport check_surrogate_regret(const DiscreteDistribution& p, const Classifier& f) {
  ExperimentReport rep;
  rep.name = "surrogate-regret";
  for (const auto& a : p.support())
    if (!(std::abs(f(a.x)) <= 1.0)) throw InputError("surrogate regret needs |f| <= 1 on the support");
  const auto bayes = bayes_classifier(p);
  const auto fp = bayes.function(0);
  const auto mis = losses::zero_one(), lin = losses::linear();
  const double mis_regret = risk(mis, p, f) - risk(mis, p, fp);
  const double lin_regret = risk(lin, p, f) - risk(lin, p, fp);
  rep.data = {{"mis_regret", mis_regret}, {"lin_regret", lin_regret}};
  rep.expect_le("mis regret <= lin regret", mis_regret, lin_regret, 1e-12);
  return rep;
}

inline ExperimentReport audit_surrogate_regret(std::size_t trials, std::uint64_t seed, unsigned workers = 1) {
  detail::Stopwatch clock;
  std::vector<double> gap(trials);
  std::vector<char> ok(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    auto rng = detail::trial_rng(seed, t);
    auto p = random_distribution(rng);
    auto cls = random_function_class(p.instances(), 1, rng, 1.0);
    auto r = check_surrogate_regret(p, cls.function(0));
    gap[t] = r.data["mis_regret"].get<double>() - r.data["lin_regret"].get<double>();
    ok[t] = r.passed();
  });
  ExperimentReport rep;
  rep.name = "surrogate-regret";
  rep.inputs = {{"trials", trials}, {"seed", seed}};
  const double worst = trials ? *std::max_element(gap.begin(), gap.end()) : 0.0;
  rep.expect_le("max over trials of (mis regret - lin regret)", worst, 0.0, 1e-12);
  rep.expect_eq("trials passing", static_cast<double>(std::count(ok.begin(), ok.end(), 1)),
                static_cast<double>(trials), 0.0);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Symmetric label noise immunity of the mean classifier

inline ExperimentReport check_sln_immunity(const DiscreteDistribution& p, const std::vector<double>& sigmas,
                                           const KernelSpec& kernel) {
  ExperimentReport rep;
  rep.name = "sln-immunity";
  const auto ep = embedding_of(p);
  const double norm2 = embedding_norm_squared(kernel, ep);
  const auto mis = losses::zero_one();
  auto clean_score = [&](const Vector& x) { return embedding_score(kernel, ep, x); };
  const double clean_risk = risk(mis, p, clean_score);
  auto factors = nlohmann::json::array();
  for (double sigma : sigmas) {
    if (!(sigma > 0.0 && sigma < 0.5)) throw InputError("noise rates must lie in (0, 1/2)");
    const auto ps = flip_symmetric(p, sigma);
    const auto es = embedding_of(ps);
    std::ostringstream tag;
    tag << "sigma=" << sigma << ": ";
    const double dist = embedding_distance(kernel, es, combine(ep, 1.0 - 2.0 * sigma, Embedding{}, 0.0));
    rep.expect_le(tag.str() + "||w_Ps - (1-2s) w_P||", dist, 0.0, 1e-12);
    if (norm2 > 0.0) factors.push_back(embedding_inner(kernel, es, ep) / norm2);
    bool agree = true;
    for (const auto& a : p.support()) {
      const double s0 = clean_score(a.x), s1 = embedding_score(kernel, es, a.x);
      agree = agree && ((s0 > 0) - (s0 < 0)) == ((s1 > 0) - (s1 < 0));
    }
    rep.expect_true(tag.str() + "labels agree on every atom", agree);
    auto noisy_score = [&](const Vector& x) { return embedding_score(kernel, es, x); };
    rep.expect_eq(tag.str() + "l_mis(P, w_P) == l_mis(P, w_Ps)", risk(mis, p, noisy_score), clean_risk, 1e-12);
  }
  rep.data = {{"scaling_factors", factors}, {"clean_norm", std::sqrt(norm2)}};
  return rep;
}

inline ExperimentReport audit_sln_immunity(std::size_t trials, const std::vector<double>& sigmas,
                                           std::uint64_t seed, const KernelSpec& kernel, unsigned workers = 1) {
  detail::Stopwatch clock;
  std::vector<ExperimentReport> reps(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    auto rng = detail::trial_rng(seed, t);
    reps[t] = check_sln_immunity(random_distribution(rng), sigmas, kernel);
  });
  ExperimentReport rep;
  rep.name = "sln-immunity";
  rep.inputs = {{"trials", trials}, {"sigmas", sigmas}, {"seed", seed}, {"kernel", kernel}};
  double worst = 0.0;
  std::size_t disagreements = 0, failed = 0;
  for (const auto& r : reps) {
    for (const auto& a : r.assertions) {
      if (a.relation == "<=") worst = std::max(worst, a.measured);
      if (a.name.find("agree") != std::string::npos && !a.passed) ++disagreements;
    }
    if (!r.passed()) ++failed;
  }
  rep.expect_le("max ||w_Ps - (1-2s) w_P||", worst, 0.0, 1e-12);
  rep.expect_eq("label disagreements", static_cast<double>(disagreements), 0.0, 0.0);
  rep.expect_eq("failed trials", static_cast<double>(failed), 0.0, 0.0);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Huber contamination

// If sigma ||w_P - w_Q|| < Gamma(P, w_P), every atom the clean mean
// classifies correctly stays correct, so l_mis(P, w_P~) <= l_mis(P, w_P).
// Equality additionally needs every misclassified atom to have
// |w_P(x)| > sigma ||w_P - w_Q||; abstentions (score 0) can always move.
// When the hypothesis fails the measurements are only reported.
inline ExperimentReport check_contamination(const DiscreteDistribution& p, const DiscreteDistribution& q,
                                            double sigma, const KernelSpec& kernel) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw InputError("contamination rate must lie in [0, 1]");
  ExperimentReport rep;
  rep.name = "contamination";
  const auto pt = contaminate(p, q, sigma);
  const auto ep = embedding_of(p), eq = embedding_of(q), et = embedding_of(pt);
  const double perturbation = sigma * embedding_distance(kernel, ep, eq);
  const double shift = embedding_distance(kernel, ep, et);
  auto clean = [&](const Vector& x) { return embedding_score(kernel, ep, x); };
  auto dirty = [&](const Vector& x) { return embedding_score(kernel, et, x); };
  const double gamma = margin_for_error(p, clean);
  double error_margin = std::numeric_limits<double>::infinity();
  for (const auto& a : p.support()) {
    const double m = a.y * clean(a.x);
    if (m <= 0.0) error_margin = std::min(error_margin, -m);
  }
  const auto mis = losses::zero_one();
  const double r_clean = risk(mis, p, clean), r_dirty = risk(mis, p, dirty);
  const bool hypothesis = perturbation < gamma;
  const bool exact = hypothesis && perturbation < error_margin;
  rep.inputs = {{"sigma", sigma}, {"kernel", kernel}};
  rep.data = {{"perturbation", perturbation},
              {"margin", gamma},
              {"error_margin", std::isfinite(error_margin) ? nlohmann::json(error_margin) : nlohmann::json(nullptr)},
              {"hypothesis_holds", hypothesis},
              {"risk_clean", r_clean},
              {"risk_contaminated", r_dirty}};
  rep.expect_eq("||w_P - w_P~|| == sigma ||w_P - w_Q||", shift, perturbation, 1e-12);
  if (hypothesis) rep.expect_le("l_mis(P, w_P~) <= l_mis(P, w_P)", r_dirty, r_clean, 1e-12);
  if (exact) rep.expect_eq("l_mis(P, w_P~) == l_mis(P, w_P)", r_dirty, r_clean, 1e-12);
  return rep;
}

// ---------------------------------------------------------------------------
// Balanced error under mutual contamination

inline ExperimentReport check_ber_immunity(const Loss& loss, const InstanceDistribution& pos,
                                           const InstanceDistribution& neg, double alpha, double beta,
                                           const FiniteFunctionClass& cls) {
  const auto robust = sln_robustness_check(loss);
  if (!robust.is_robust())
    throw PreconditionError("loss '" + loss.name() + "' fails sln_robustness_check (verdict " +
                            to_string(robust.verdict) + ")");
  const double c = *robust.constant;
  const auto [tpos, tneg] = mutually_contaminate(pos, neg, alpha, beta);
  ExperimentReport rep;
  rep.name = "ber-immunity";
  rep.inputs = {{"loss", loss.name()}, {"alpha", alpha}, {"beta", beta}, {"class_size", cls.size()}};
  std::vector<double> clean, dirty;
  double worst = 0.0;
  const double slope = 1.0 - alpha - beta, intercept = 0.5 * (alpha + beta) * c;
  for (std::size_t k = 0; k < cls.size(); ++k) {
    const auto f = cls.function(k);
    clean.push_back(balanced_error(loss, pos, neg, f));
    dirty.push_back(balanced_error(loss, tpos, tneg, f));
    worst = std::max(worst, std::abs(dirty.back() - (slope * clean.back() + intercept)));
  }
  rep.expect_le("max |BER~ - ((1-a-b) BER + (a+b) C / 2)|", worst, 0.0, 1e-10);
  rep.expect_true("argmin over the class is invariant",
                  argmin_set(clean, 1e-10) == argmin_set(dirty, 1e-10));
  // Least-squares slope/intercept of corrupted vs clean BER across the class.
  double mc = 0.0, md = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    mc += clean[k];
    md += dirty[k];
  }
  mc /= static_cast<double>(clean.size());
  md /= static_cast<double>(clean.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    sxx += (clean[k] - mc) * (clean[k] - mc);
    sxy += (clean[k] - mc) * (dirty[k] - md);
  }
  rep.data = {{"C", c}, {"expected_slope", slope}, {"expected_intercept", intercept}};
  if (sxx > 1e-18) {
    rep.data["measured_slope"] = sxy / sxx;
    rep.data["measured_intercept"] = md - (sxy / sxx) * mc;
  }
  return rep;
}

inline ExperimentReport audit_ber_immunity(const Loss& loss, std::size_t trials, std::uint64_t seed,
                                           unsigned workers = 1) {
  detail::Stopwatch clock;
  std::vector<ExperimentReport> reps(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    auto rng = detail::trial_rng(seed, t);
    auto pos = random_instance_distribution(rng);
    auto neg = random_instance_distribution(rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double a = 0.45 * u(rng), b = 0.45 * u(rng);
    std::vector<Vector> xs = pos.support();
    for (const auto& x : neg.support()) xs.push_back(x);
    auto cls = random_function_class(xs, 20, rng, 1.0);
    reps[t] = check_ber_immunity(loss, pos, neg, a, b, cls);
  });
  ExperimentReport rep;
  rep.name = "ber-immunity";
  rep.inputs = {{"loss", loss.name()}, {"trials", trials}, {"seed", seed}};
  double worst = 0.0;
  std::size_t argmin_changes = 0;
  for (const auto& r : reps) {
    worst = std::max(worst, r.assertions[0].measured);
    if (!r.assertions[1].passed) ++argmin_changes;
  }
  rep.expect_le("max affine-identity residual", worst, 0.0, 1e-10);
  rep.expect_eq("argmin changes", static_cast<double>(argmin_changes), 0.0, 0.0);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Instance-dependent noise

// l(P, f*_s) <= l(P, f*) / min (1 - 2 s(x,y)) where f*_s and f* minimize the
// loss over the class on the corrupted and clean distributions.
inline ExperimentReport check_ghosh_bound(const DiscreteDistribution& p, const NoiseFunctionTable& table,
                                          const Loss& loss, const FiniteFunctionClass& cls) {
  const auto robust = sln_robustness_check(loss);
  if (!robust.is_robust())
    throw PreconditionError("loss '" + loss.name() + "' fails sln_robustness_check (verdict " +
                            to_string(robust.verdict) + ")");
  if (!(table.max_rate() < 0.5)) throw PreconditionError("noise rates must be below 1/2");
  const auto ps = flip_instance_dependent(p, table);
  double min_factor = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) min_factor = std::min(min_factor, 1.0 - 2.0 * table.at(i));
  const auto clean = brute_force_min(loss, p, cls);
  const auto noisy = brute_force_min(loss, ps, cls);
  const double achieved = risk(loss, p, cls.function(noisy.index));
  const double bound = clean.risk / min_factor;
  ExperimentReport rep;
  rep.name = "ghosh-bound";
  rep.inputs = {{"loss", loss.name()}, {"class_size", cls.size()}, {"max_rate", table.max_rate()}};
  rep.data = {{"clean_min_risk", clean.risk},
              {"noisy_minimizer_clean_risk", achieved},
              {"bound", bound},
              {"clean_index", clean.index},
              {"noisy_index", noisy.index}};
  rep.expect_le("l(P, f*_s) <= l(P, f*) / min(1 - 2 s)", achieved, bound, 1e-12);
  return rep;
}

inline ExperimentReport audit_ghosh_bound(std::size_t trials, std::uint64_t seed, unsigned workers = 1) {
  detail::Stopwatch clock;
  std::vector<ExperimentReport> reps(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    auto rng = detail::trial_rng(seed, t);
    auto p = random_distribution(rng);
    std::uniform_real_distribution<double> rate(0.0, 0.49);
    std::map<std::size_t, double> m;
    for (std::size_t i = 0; i < p.size(); ++i) m[i] = rate(rng);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    auto cls = random_function_class(p.instances(), size(rng), rng, 1.0);
    reps[t] = check_ghosh_bound(p, NoiseFunctionTable(std::move(m)), losses::linear(), cls);
  });
  ExperimentReport rep;
  rep.name = "ghosh-bound";
  rep.inputs = {{"trials", trials}, {"seed", seed}};
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t failed = 0;
  for (const auto& r : reps) {
    worst = std::max(worst, r.assertions[0].measured - r.assertions[0].expected);
    if (!r.passed()) ++failed;
  }
  rep.expect_le("max (achieved - bound)", trials ? worst : 0.0, 0.0, 1e-12);
  rep.expect_eq("failed trials", static_cast<double>(failed), 0.0, 0.0);

  // Separable instance: deterministic labels and a perfect classifier in the
  // class, so the corrupted minimizer must also have zero clean loss.
  auto rng = detail::trial_rng(seed, trials);
  std::uniform_real_distribution<double> coord(-1.0, 1.0), rate(0.0, 0.49);
  std::vector<LabeledPoint> atoms;
  std::vector<double> probs;
  for (int i = 0; i < 4; ++i) {
    Vector x(2);
    x << coord(rng), coord(rng);
    atoms.push_back({x, i % 2 == 0 ? 1 : -1});
    probs.push_back(0.25);
  }
  DiscreteDistribution sep(atoms, probs);
  std::map<std::size_t, double> m;
  for (std::size_t i = 0; i < sep.size(); ++i) m[i] = rate(rng);
  auto cls = random_function_class(sep.instances(), 30, rng, 1.0);
  std::vector<std::vector<double>> tables;
  for (std::size_t k = 0; k < cls.size(); ++k) tables.push_back(cls.table(k));
  std::vector<double> perfect;
  for (const auto& a : sep.support()) perfect.push_back(static_cast<double>(a.y));
  tables.insert(tables.begin() + 7, perfect);
  FiniteFunctionClass with_perfect(sep.instances(), tables);
  auto r = check_ghosh_bound(sep, NoiseFunctionTable(m), losses::linear(), with_perfect);
  rep.expect_eq("separable: clean loss of corrupted minimizer", r.data["noisy_minimizer_clean_risk"].get<double>(),
                0.0, 0.0);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Corrected-loss unbiasedness and robustness characterization

// E_{Q_s}[l_s] == E_Q[l] for two-atom score-label distributions Q.
inline ExperimentReport audit_unbiased_correction(const std::vector<Loss>& loss_set,
                                                  const std::vector<double>& sigmas, std::size_t trials,
                                                  std::uint64_t seed) {
  detail::Stopwatch clock;
  ExperimentReport rep;
  rep.name = "unbiased-correction";
  rep.inputs = {{"sigmas", sigmas}, {"trials", trials}, {"seed", seed}};
  for (const auto& loss : loss_set) {
    double worst = 0.0;
    for (double sigma : sigmas) {
      const auto corrected = correct_sln(loss, sigma);
      for (std::size_t t = 0; t < trials; ++t) {
        auto rng = detail::trial_rng(seed, t);
        std::uniform_real_distribution<double> v(-3.0, 3.0), u(0.0, 1.0);
        std::bernoulli_distribution coin(0.5);
        const double q = u(rng);
        ScoreDistribution dist{{v(rng), v(rng)}, {coin(rng) ? 1 : -1, coin(rng) ? 1 : -1}, {q, 1.0 - q}};
        worst = std::max(worst, std::abs(dist.flipped(sigma).expected(corrected) - dist.expected(loss)));
      }
    }
    rep.expect_le(loss.name() + ": max |E_Qs[l_s] - E_Q[l]|", worst, 0.0, 1e-12);
  }
  rep.runtime_seconds = clock.seconds();
  return rep;
}

inline ExperimentReport robustness_characterization(const EvaluationGrid& grid = {}) {
  detail::Stopwatch clock;
  ExperimentReport rep;
  rep.name = "robustness-characterization";
  rep.inputs = {{"grid_half_width", grid.half_width()}, {"grid_step", grid.step()}};
  const auto lin = sln_robustness_check(losses::linear(), grid);
  const auto mis = sln_robustness_check(losses::zero_one(), grid);
  const auto hin = sln_robustness_check(losses::hinge(), grid);
  const auto logi = sln_robustness_check(losses::logistic(), grid);
  rep.expect_true("linear is robust", lin.is_robust());
  rep.expect_eq("linear C", lin.constant.value_or(NAN), 2.0, 0.0);
  rep.expect_true("zero-one is robust", mis.is_robust());
  rep.expect_eq("zero-one C", mis.constant.value_or(NAN), 1.0, 0.0);
  rep.expect_true("hinge is not robust", hin.verdict == RobustnessVerdict::not_robust);
  rep.expect_true("logistic is not robust", logi.verdict == RobustnessVerdict::not_robust);
  // Grid points where l(1,v) + l(-1,v) departs from its median value.
  auto off_points = [&](const Loss& loss) {
    std::vector<double> sums, out;
    for (double v : grid.values()) sums.push_back(loss(1, v) + loss(-1, v));
    const double mid = kmc::detail::median(sums);
    for (std::size_t i = 0; i < sums.size(); ++i)
      if (std::abs(sums[i] - mid) > kConstancyTolerance) out.push_back(grid.values()[i]);
    return out;
  };
  rep.data = {{"zero_one_max_deviation", mis.max_deviation},
              {"zero_one_deviating_scores", off_points(losses::zero_one())},
              {"hinge_max_deviation", hin.max_deviation},
              {"logistic_max_deviation", logi.max_deviation}};
  rep.runtime_seconds = clock.seconds();
  return rep;
}

struct OrderReversal {
  ScoreDistribution q, q_prime;
  double sigma = 0.0;
};

// Searches two-atom score-label distributions for Q <=_l Q' with
// Q_s >_l Q'_s, witnessing that l is not robust to symmetric label noise.
inline std::optional<OrderReversal> find_order_reversal(const Loss& loss, double sigma, std::uint64_t seed,
                                                        std::size_t attempts = 10000) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(-3.0, 3.0), u(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  auto draw = [&] {
    const double q = u(rng);
    return ScoreDistribution{{v(rng), v(rng)}, {coin(rng) ? 1 : -1, coin(rng) ? 1 : -1}, {q, 1.0 - q}};
  };
  for (std::size_t i = 0; i < attempts; ++i) {
    auto a = draw(), b = draw();
    const double ea = a.expected(loss), eb = b.expected(loss);
    if (ea > eb) std::swap(a, b);
    const double fa = a.flipped(sigma).expected(loss), fb = b.flipped(sigma).expected(loss);
    if (fa > fb + 1e-9) return OrderReversal{a, b, sigma};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Long-Servedio construction

struct HingeMinimizer {
  double angle = 0.0;
  double scale = 0.0;
  double risk = 0.0;
  Vector w;
};

// argmin over w in R^2 of E_P [1 - y <w, x>]_+, with the direction of w on an
// angle grid and the scale r >= 0 minimized exactly: the risk is convex and
// piecewise linear in r, so the optimum is at r = 0 or a breakpoint 1/|<d,x>|.
inline HingeMinimizer hinge_minimizer_origin_hyperplanes(const DiscreteDistribution& p, double angle_step) {
  if (p.dim() != 2) throw InputError("origin-hyperplane search is planar");
  const auto hinge = losses::hinge();
  HingeMinimizer best;
  best.risk = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / angle_step));
  for (std::size_t k = 0; k < steps; ++k) {
    const double theta = static_cast<double>(k) * angle_step;
    Vector d(2);
    d << std::cos(theta), std::sin(theta);
    std::vector<double> scales{0.0};
    for (const auto& a : p.support()) {
      const double s = d.dot(a.x);
      if (s != 0.0) scales.push_back(1.0 / std::abs(s));
    }
    for (double r : scales) {
      const Vector w = r * d;
      const double value = risk(hinge, p, [&](const Vector& x) { return w.dot(x); });
      if (value < best.risk) best = {theta, r, value, w};
    }
  }
  return best;
}

struct LongServedioOptions {
  double gamma = 1.0 / 24.0;
  std::vector<double> sigmas = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45};
  double angle_step = 0.001;
};

inline ExperimentReport run_long_servedio(const LongServedioOptions& opts = {}) {
  detail::Stopwatch clock;
  const auto p = long_servedio(opts.gamma);
  const auto kernel = KernelSpec::linear();
  const auto mis = losses::zero_one();
  ExperimentReport rep;
  rep.name = "long-servedio";
  rep.inputs = {{"gamma", opts.gamma}, {"sigmas", opts.sigmas}, {"angle_step", opts.angle_step}};

  auto hinge_mis = [&](double sigma) {
    const auto ps = sigma == 0.0 ? p : flip_symmetric(p, sigma);
    const auto h = hinge_minimizer_origin_hyperplanes(ps, opts.angle_step);
    return std::make_pair(h, risk(mis, p, [&](const Vector& x) { return h.w.dot(x); }));
  };

  const auto [h0, r0] = hinge_mis(0.0);
  rep.expect_eq("sigma=0: hinge minimizer l_mis", r0, 0.0, 0.0);

  auto rows = nlohmann::json::array();
  std::optional<double> first_failure;
  double mean_worst = 0.0;
  for (double sigma : opts.sigmas) {
    const auto [h, r_hinge] = hinge_mis(sigma);
    const auto es = embedding_of(flip_symmetric(p, sigma));
    const double r_mean = risk(mis, p, [&](const Vector& x) { return embedding_score(kernel, es, x); });
    mean_worst = std::max(mean_worst, r_mean);
    if (!first_failure && std::abs(r_hinge - 0.5) <= 1e-12) first_failure = sigma;
    rows.push_back({{"sigma", sigma},
                    {"hinge_angle", h.angle},
                    {"hinge_scale", h.scale},
                    {"hinge_mis", r_hinge},
                    {"mean_mis", r_mean}});
  }
  rep.expect_eq("mean classifier l_mis, worst over sigma grid", mean_worst, 0.0, 0.0);
  rep.expect_true("some sigma gives hinge minimizer l_mis = 0.5", first_failure.has_value());
  rep.data = {{"sweep", rows}};
  if (first_failure) rep.data["failing_sigma"] = *first_failure;
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Herding compression curve

enum class CompressionMode { recursive, parallel };

struct CompressionOptions {
  std::vector<double> tolerances = {0.01};
  CompressionMode mode = CompressionMode::recursive;
  std::size_t min_size = 100;
  std::size_t max_group_size = 200;
  unsigned workers = 1;
  // When set, the first stage at the first tolerance must be within this
  // accuracy of the full-mean baseline.
  std::optional<double> accuracy_tolerance;
};

struct CurvePoint {
  double tolerance = 0.0;
  std::size_t stage = 0;
  std::size_t herd_size = 0;
  double fraction = 0.0;
  double accuracy = 0.0;
  double herd_error = 0.0;
  double max_score_deviation = 0.0;
};

template <typename Classifier>
double accuracy(const Classifier& f, const LabeledSample& test, unsigned workers = 1) {
  std::vector<char> correct(test.size());
  parallel_for(test.size(), workers, [&](std::size_t i) {
    const double s = f(test.x(i));
    correct[i] = (s > 0.0 && test.y(i) == 1) || (s < 0.0 && test.y(i) == -1);
  });
  return static_cast<double>(std::count(correct.begin(), correct.end(), 1)) / static_cast<double>(test.size());
}

inline ExperimentReport run_compression_experiment(const LabeledSample& train, const LabeledSample& test,
                                                   const KernelSpec& kernel, const CompressionOptions& opts) {
  detail::Stopwatch clock;
  ExperimentReport rep;
  rep.name = "compression";
  rep.inputs = {{"n_train", train.size()},
                {"n_test", test.size()},
                {"kernel", kernel},
                {"tolerances", opts.tolerances},
                {"mode", opts.mode == CompressionMode::recursive ? "recursive" : "parallel"},
                {"min_size", opts.min_size},
                {"max_group_size", opts.max_group_size}};
  const auto full = fit(train, kernel);
  std::vector<double> full_scores(test.size());
  parallel_for(test.size(), opts.workers, [&](std::size_t i) { full_scores[i] = full.score(test.x(i)); });
  auto correct = [&](double s, int y) { return (s > 0.0 && y == 1) || (s < 0.0 && y == -1); };
  double baseline = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) baseline += correct(full_scores[i], test.y(i));
  baseline /= static_cast<double>(test.size());

  std::vector<CurvePoint> curve;
  for (double tol : opts.tolerances) {
    HerdingConfig cfg;
    cfg.tolerance = tol;
    cfg.workers = opts.workers;
    RecursiveOptions ro;
    ro.min_size = opts.min_size;
    if (opts.mode == CompressionMode::parallel) ro.max_group_size = opts.max_group_size;

    const auto rec = recursive_herd(train, kernel, cfg, ro);
    for (std::size_t stage = 0; stage < rec.stages.size(); ++stage) {
      const auto& summary = rec.stages[stage];
      const auto& current = summary.members;
      Herd as_herd;
      as_herd.members = current;
      const auto sparse = herd_to_classifier(as_herd, train, kernel);
      std::vector<double> dev(test.size());
      std::vector<char> ok(test.size());
      parallel_for(test.size(), opts.workers, [&](std::size_t i) {
        const double s = sparse.score(test.x(i));
        dev[i] = std::abs(s - full_scores[i]);
        ok[i] = correct(s, test.y(i));
      });
      CurvePoint pt;
      pt.tolerance = tol;
      pt.stage = stage + 1;
      pt.herd_size = current.size();
      pt.fraction = static_cast<double>(current.size()) / static_cast<double>(train.size());
      pt.accuracy = static_cast<double>(std::count(ok.begin(), ok.end(), 1)) / static_cast<double>(test.size());
      pt.herd_error = summary.cumulative_error;
      pt.max_score_deviation = *std::max_element(dev.begin(), dev.end());
      curve.push_back(pt);
    }
  }

  double worst_excess = -std::numeric_limits<double>::infinity();
  auto rows = nlohmann::json::array();
  for (const auto& pt : curve) {
    worst_excess = std::max(worst_excess, pt.max_score_deviation - pt.herd_error);
    rows.push_back({{"tolerance", pt.tolerance},
                    {"stage", pt.stage},
                    {"herd_size", pt.herd_size},
                    {"fraction", pt.fraction},
                    {"accuracy", pt.accuracy},
                    {"herd_error", pt.herd_error},
                    {"max_score_deviation", pt.max_score_deviation}});
  }
  if (!curve.empty())
    rep.expect_le("max over curve of (score deviation - herd error)", worst_excess, 0.0, 1e-12);
  if (opts.accuracy_tolerance && !curve.empty())
    rep.expect_le("|first-stage accuracy - baseline|", std::abs(curve.front().accuracy - baseline),
                  *opts.accuracy_tolerance, 0.0);
  rep.data = {{"baseline_accuracy", baseline}, {"curve", rows}};
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// fraction,accuracy,herd_size,herd_error,tolerance,stage
inline std::string curve_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "fraction,accuracy,herd_size,herd_error,tolerance,stage\n";
  for (const auto& row : rep.data.value("curve", nlohmann::json::array()))
    os << row["fraction"].get<double>() << ',' << row["accuracy"].get<double>() << ','
       << row["herd_size"].get<std::size_t>() << ',' << row["herd_error"].get<double>() << ','
       << row["tolerance"].get<double>() << ',' << row["stage"].get<std::size_t>() << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Named suites

struct SuiteOptions {
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

inline ExperimentReport run_contamination_suite(const SuiteOptions& o) {
  detail::Stopwatch clock;
  ExperimentReport rep;
  rep.name = "contamination";
  rep.inputs = {{"seed", o.seed}};
  const auto kernel = KernelSpec::gaussian(1.0);
  std::size_t covered = 0;
  for (std::size_t t = 0; t < 100; ++t) {
    auto rng = detail::trial_rng(o.seed, t);
    auto p = random_distribution(rng);
    auto q = random_distribution(rng);
    auto ep = embedding_of(p);
    const double gamma = margin_for_error(p, [&](const Vector& x) { return embedding_score(kernel, ep, x); });
    // sigma < Gamma / 2 guarantees immunity against any Q.
    const double sigma = 0.49 * gamma;
    auto r = check_contamination(p, q, sigma, kernel);
    covered += r.data["hypothesis_holds"].get<bool>() ? 1 : 0;
    rep.merge(r, "trial " + std::to_string(t) + ": ");
  }
  rep.data = {{"trials_with_hypothesis", covered}};
  rep.runtime_seconds = clock.seconds();
  return rep;
}

inline std::vector<std::string> suite_names() {
  return {"surrogate-regret", "sln-immunity",  "unbiased-correction", "robustness-characterization",
          "contamination",    "ber-immunity",  "ghosh-bound",         "long-servedio",
          "compression"};
}

inline ExperimentReport run_suite(const std::string& name, const SuiteOptions& o) {
  if (name == "surrogate-regret") return audit_surrogate_regret(1000, o.seed, o.workers);
  if (name == "sln-immunity")
    return audit_sln_immunity(100, {0.1, 0.25, 0.4}, o.seed, KernelSpec::gaussian(1.0), o.workers);
  if (name == "unbiased-correction") return audit_unbiased_correction(losses::builtins(), {0.1, 0.25, 0.4}, 100, o.seed);
  if (name == "robustness-characterization") return robustness_characterization();
  if (name == "contamination") return run_contamination_suite(o);
  if (name == "ber-immunity") return audit_ber_immunity(losses::linear(), 100, o.seed, o.workers);
  if (name == "ghosh-bound") return audit_ghosh_bound(200, o.seed, o.workers);
  if (name == "long-servedio") return run_long_servedio();
  if (name == "compression") {
    const auto train = synth_blobs(2000, 2, 4.0, o.seed);
    const auto test = synth_blobs(2000, 2, 4.0, o.seed + 1);
    CompressionOptions co;
    co.workers = o.workers;
    co.accuracy_tolerance = 0.02;
    co.min_size = 10;
    return run_compression_experiment(train, test, KernelSpec::gaussian(1.0), co);
  }
  throw InputError("unknown suite '" + name + "'");
}

}  // namespace kmc::lab
