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

// Labeled samples, exact finite-support distributions over (instance, label)
// pairs, and the corruption processes applied to them: symmetric,
// class-conditional and instance-dependent label flips, Huber contamination
// and mutual contamination of the class conditionals.
//
// Corruptions are computed exactly as mixtures. Atoms are merged on exact
// equality of (instance, label); the operations only ever reuse existing
// instance vectors, so no tolerance is involved. Atom order is the order of
// first appearance, and zero-mass contributions are dropped, so a
// zero-strength corruption returns its input unchanged.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kmc/error.hpp"
#include "kmc/kernel.hpp"

namespace kmc {

struct LabeledPoint {
  Vector x;
  int y = 1;
};

class LabeledSample {
 public:
  LabeledSample() = default;
  LabeledSample(std::vector<Vector> instances, std::vector<int> labels, std::string source = {})
      : instances_(std::move(instances)), labels_(std::move(labels)), source_(std::move(source)) {
    if (instances_.empty()) throw InputError("sample must contain at least one point");
    if (instances_.size() != labels_.size())
      throw InputError("instances and labels differ in length");
    for (const auto& x : instances_)
      if (x.size() != instances_.front().size())
        throw InputError("instances must share one dimension");
    for (int y : labels_) check_label(y);
  }

  std::size_t size() const { return labels_.size(); }
  Eigen::Index dim() const { return instances_.empty() ? 0 : instances_.front().size(); }
  const std::vector<Vector>& instances() const { return instances_; }
  const std::vector<int>& labels() const { return labels_; }
  const Vector& x(std::size_t i) const { return instances_[i]; }
  int y(std::size_t i) const { return labels_[i]; }
  const std::string& source() const { return source_; }

  LabeledSample negated() const {
    std::vector<int> flipped(labels_);
    for (int& y : flipped) y = -y;
    return {instances_, std::move(flipped), source_};
  }

 private:
  std::vector<Vector> instances_;
  std::vector<int> labels_;
  std::string source_;
};

namespace detail {

inline std::vector<double> key_of(const Vector& x) { return {x.data(), x.data() + x.size()}; }

}  // namespace detail

// Instance-only distribution (a class conditional P+ or P-).
class InstanceDistribution {
 public:
  InstanceDistribution() = default;
  InstanceDistribution(std::vector<Vector> support, std::vector<double> prob)
      : support_(std::move(support)), prob_(std::move(prob)) {
    if (support_.empty()) throw InputError("distribution needs a non-empty support");
    if (support_.size() != prob_.size()) throw InputError("support and prob differ in length");
    std::map<std::vector<double>, int> seen;
    double total = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
      if (support_[i].size() != support_.front().size())
        throw InputError("support points must share one dimension");
      if (!(prob_[i] >= 0.0)) throw InputError("probabilities must be non-negative");
      if (!seen.emplace(detail::key_of(support_[i]), 0).second)
        throw InputError("support points must be distinct");
      total += prob_[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("probabilities must sum to 1");
  }

  std::size_t size() const { return support_.size(); }
  Eigen::Index dim() const { return support_.front().size(); }
  const std::vector<Vector>& support() const { return support_; }
  const std::vector<double>& prob() const { return prob_; }

 private:
  std::vector<Vector> support_;
  std::vector<double> prob_;
};

class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  DiscreteDistribution(std::vector<LabeledPoint> support, std::vector<double> prob)
      : support_(std::move(support)), prob_(std::move(prob)) {
    if (support_.empty()) throw InputError("distribution needs a non-empty support");
    if (support_.size() != prob_.size()) throw InputError("support and prob differ in length");
    std::map<std::pair<std::vector<double>, int>, int> seen;
    double total = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
      check_label(support_[i].y);
      if (support_[i].x.size() != support_.front().x.size())
        throw InputError("support points must share one dimension");
      if (!(prob_[i] >= 0.0)) throw InputError("probabilities must be non-negative");
      if (!seen.emplace(std::make_pair(detail::key_of(support_[i].x), support_[i].y), 0).second)
        throw InputError("support atoms must be distinct");
      total += prob_[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("probabilities must sum to 1");
  }

  // Merges repeated atoms by summing their mass, in first-appearance order.
  // Exactly-zero contributions are skipped.
  static DiscreteDistribution from_atoms(const std::vector<std::pair<LabeledPoint, double>>& atoms) {
    std::vector<LabeledPoint> support;
    std::vector<double> prob;
    std::map<std::pair<std::vector<double>, int>, std::size_t> index;
    for (const auto& [pt, p] : atoms) {
      if (p == 0.0) continue;
      auto key = std::make_pair(detail::key_of(pt.x), pt.y);
      auto it = index.find(key);
      if (it == index.end()) {
        index.emplace(std::move(key), support.size());
        support.push_back(pt);
        prob.push_back(p);
      } else {
        prob[it->second] += p;
      }
    }
    return {std::move(support), std::move(prob)};
  }

  // Uniform distribution over the points of a sample (duplicates merged).
  static DiscreteDistribution empirical(const LabeledSample& s) {
    std::vector<std::pair<LabeledPoint, double>> atoms;
    atoms.reserve(s.size());
    const double w = 1.0 / static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) atoms.push_back({{s.x(i), s.y(i)}, w});
    return from_atoms(atoms);
  }

  std::size_t size() const { return support_.size(); }
  Eigen::Index dim() const { return support_.front().x.size(); }
  const std::vector<LabeledPoint>& support() const { return support_; }
  const std::vector<double>& prob() const { return prob_; }
  const LabeledPoint& atom(std::size_t i) const { return support_[i]; }

  std::optional<std::size_t> find(const Vector& x, int y) const {
    for (std::size_t i = 0; i < support_.size(); ++i)
      if (support_[i].y == y && support_[i].x == x) return i;
    return std::nullopt;
  }

  // Distinct instances of the support, in first-appearance order.
  std::vector<Vector> instances() const {
    std::vector<Vector> out;
    std::map<std::vector<double>, int> seen;
    for (const auto& a : support_)
      if (seen.emplace(detail::key_of(a.x), 0).second) out.push_back(a.x);
    return out;
  }

  // Same instances with every label negated (P').
  DiscreteDistribution label_flipped() const {
    std::vector<std::pair<LabeledPoint, double>> atoms;
    for (std::size_t i = 0; i < size(); ++i)
      atoms.push_back({{support_[i].x, -support_[i].y}, prob_[i]});
    return from_atoms(atoms);
  }

  double label_mass(int y) const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      if (support_[i].y == y) m += prob_[i];
    return m;
  }

  // P(X | Y = y). Throws if the label has no mass.
  InstanceDistribution conditional(int y) const {
    check_label(y);
    double mass = label_mass(y);
    if (mass <= 0.0) throw InputError("conditional on a label with zero mass");
    std::vector<Vector> support;
    std::vector<double> prob;
    for (std::size_t i = 0; i < size(); ++i) {
      if (support_[i].y != y || prob_[i] == 0.0) continue;
      support.push_back(support_[i].x);
      prob.push_back(prob_[i] / mass);
    }
    double total = 0.0;
    for (double p : prob) total += p;
    for (double& p : prob) p /= total;
    return {std::move(support), std::move(prob)};
  }

 private:
  std::vector<LabeledPoint> support_;
  std::vector<double> prob_;
};

// Per-atom flip probability sigma(x,y) in [0, 1/2), keyed by support index.
class NoiseFunctionTable {
 public:
  NoiseFunctionTable() = default;
  explicit NoiseFunctionTable(std::map<std::size_t, double> rates) : rates_(std::move(rates)) {
    for (const auto& [i, s] : rates_)
      if (!(s >= 0.0 && s < 0.5))
        throw InputError("noise rate for atom " + std::to_string(i) + " outside [0, 1/2)");
  }
  static NoiseFunctionTable constant(std::size_t n, double sigma) {
    std::map<std::size_t, double> m;
    for (std::size_t i = 0; i < n; ++i) m[i] = sigma;
    return NoiseFunctionTable(std::move(m));
  }

  double at(std::size_t i) const {
    auto it = rates_.find(i);
    if (it == rates_.end()) throw InputError("noise table has no entry for atom " + std::to_string(i));
    return it->second;
  }
  double max_rate() const {
    double m = 0.0;
    for (const auto& [i, s] : rates_) m = std::max(m, s);
    return m;
  }
  const std::map<std::size_t, double>& rates() const { return rates_; }

 private:
  std::map<std::size_t, double> rates_;
};

namespace detail {

template <typename Rate>
DiscreteDistribution flip_with(const DiscreteDistribution& p, Rate rate) {
  std::vector<std::pair<LabeledPoint, double>> atoms;
  atoms.reserve(2 * p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = p.atom(i);
    const double s = rate(i, a.y);
    atoms.push_back({a, (1.0 - s) * p.prob()[i]});
    atoms.push_back({{a.x, -a.y}, s * p.prob()[i]});
  }
  return DiscreteDistribution::from_atoms(atoms);
}

}  // namespace detail

// P_sigma = (1 - sigma) P + sigma P'.
inline DiscreteDistribution flip_symmetric(const DiscreteDistribution& p, double sigma) {
  if (!(sigma >= 0.0 && sigma < 0.5)) throw InputError("symmetric noise rate must lie in [0, 1/2)");
  return detail::flip_with(p, [sigma](std::size_t, int) { return sigma; });
}

// Label y is flipped with probability sigma_y.
inline DiscreteDistribution flip_class_conditional(const DiscreteDistribution& p,
                                                   double sigma_neg, double sigma_pos) {
  if (!(sigma_neg >= 0.0 && sigma_pos >= 0.0)) throw InputError("noise rates must be non-negative");
  if (!(sigma_neg + sigma_pos < 1.0)) throw InputError("noise rates must sum to less than 1");
  return detail::flip_with(
      p, [=](std::size_t, int y) { return y == 1 ? sigma_pos : sigma_neg; });
}

inline DiscreteDistribution flip_instance_dependent(const DiscreteDistribution& p,
                                                    const NoiseFunctionTable& table) {
  for (std::size_t i = 0; i < p.size(); ++i) table.at(i);
  return detail::flip_with(p, [&](std::size_t i, int) { return table.at(i); });
}

// Huber contamination (1 - sigma) P + sigma Q.
inline DiscreteDistribution contaminate(const DiscreteDistribution& p,
                                        const DiscreteDistribution& q, double sigma) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw InputError("contamination level must lie in [0, 1]");
  if (p.dim() != q.dim()) throw InputError("contaminate: dimension mismatch");
  std::vector<std::pair<LabeledPoint, double>> atoms;
  for (std::size_t i = 0; i < p.size(); ++i) atoms.push_back({p.atom(i), (1.0 - sigma) * p.prob()[i]});
  for (std::size_t i = 0; i < q.size(); ++i) atoms.push_back({q.atom(i), sigma * q.prob()[i]});
  return DiscreteDistribution::from_atoms(atoms);
}

namespace detail {

inline InstanceDistribution mix(const InstanceDistribution& a, double wa,
                                const InstanceDistribution& b, double wb) {
  std::vector<Vector> support;
  std::vector<double> prob;
  std::map<std::vector<double>, std::size_t> index;
  auto add = [&](const InstanceDistribution& d, double w) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      double p = w * d.prob()[i];
      if (p == 0.0) continue;
      auto key = key_of(d.support()[i]);
      auto it = index.find(key);
      if (it == index.end()) {
        index.emplace(std::move(key), support.size());
        support.push_back(d.support()[i]);
        prob.push_back(p);
      } else {
        prob[it->second] += p;
      }
    }
  };
  add(a, wa);
  add(b, wb);
  return {std::move(support), std::move(prob)};
}

}  // namespace detail

// (P+~, P-~) = ((1 - alpha) P+ + alpha P-, beta P+ + (1 - beta) P-).
inline std::pair<InstanceDistribution, InstanceDistribution> mutually_contaminate(
    const InstanceDistribution& pos, const InstanceDistribution& neg, double alpha, double beta) {
  if (!(alpha >= 0.0 && beta >= 0.0)) throw InputError("mixing weights must be non-negative");
  if (!(alpha + beta < 1.0)) throw InputError("mixing weights must satisfy alpha + beta < 1");
  if (pos.dim() != neg.dim()) throw InputError("mutually_contaminate: dimension mismatch");
  return {detail::mix(pos, 1.0 - alpha, neg, alpha), detail::mix(pos, beta, neg, 1.0 - beta)};
}

// n i.i.d. draws; deterministic for a given seed.
inline LabeledSample sample_from(const DiscreteDistribution& p, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample size must be >= 1");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(p.prob().begin(), p.prob().end());
  std::vector<Vector> xs;
  std::vector<int> ys;
  xs.reserve(n);
  ys.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = p.atom(pick(rng));
    xs.push_back(a.x);
    ys.push_back(a.y);
  }
  return {std::move(xs), std::move(ys), "sample_from"};
}

// Two unit-variance isotropic Gaussian clouds centred at +-(separation/2) e1.
// Labels alternate +1, -1, ... so contiguous blocks contain both classes.
inline LabeledSample synth_blobs(std::size_t n, int d, double separation, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw InputError("synth_blobs: n must be even and >= 2");
  if (d < 1) throw InputError("synth_blobs: dimension must be >= 1");
  if (!(separation > 0.0)) throw InputError("synth_blobs: separation must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> xs;
  std::vector<int> ys;
  xs.reserve(n);
  ys.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i % 2 == 0 ? 1 : -1;
    Vector x(d);
    for (int k = 0; k < d; ++k) x[k] = normal(rng);
    x[0] += y * separation / 2.0;
    xs.push_back(std::move(x));
    ys.push_back(y);
  }
  return {std::move(xs), std::move(ys), "synth_blobs"};
}

// Three positively labelled points in the plane: the southern point
// (gamma, -gamma) with mass 1/2, the large-margin point (1, 0) and the point
// (gamma, 5 gamma) with mass 1/4 each.
inline DiscreteDistribution long_servedio(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0 / 6.0)) throw InputError("long_servedio: gamma must lie in (0, 1/6)");
  auto pt = [](double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
  };
  return {{{pt(gamma, -gamma), 1}, {pt(1.0, 0.0), 1}, {pt(gamma, 5.0 * gamma), 1}},
          {0.5, 0.25, 0.25}};
}

// {"support": [[[x...], y], ...], "prob": [...]}
inline void to_json(nlohmann::json& j, const DiscreteDistribution& p) {
  auto support = nlohmann::json::array();
  for (const auto& a : p.support())
    support.push_back({detail::key_of(a.x), a.y});
  j = nlohmann::json{{"support", support}, {"prob", p.prob()}};
}

inline void from_json(const nlohmann::json& j, DiscreteDistribution& p) {
  std::vector<LabeledPoint> support;
  std::vector<double> prob;
  try {
    for (const auto& atom : j.at("support")) {
      auto xs = atom.at(0).get<std::vector<double>>();
      support.push_back({Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                         atom.at(1).get<int>()});
    }
    prob = j.at("prob").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad distribution JSON: ") + e.what());
  }
  p = DiscreteDistribution(std::move(support), std::move(prob));
}

}  // namespace kmc
