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

// The kernel mean classifier f(x) = sum_i a_i y_i K(x_i, x), a_i >= 0,
// sum a_i = 1, together with the mean-embedding geometry it rests on:
// ||w_S||, MMD, kernel selection by 1 - ||w_S||, margins and the KDE view.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kmc/data.hpp"
#include "kmc/error.hpp"
#include "kmc/kernel.hpp"
#include "kmc/loss.hpp"
#include "kmc/parallel.hpp"

namespace kmc {

// A finite expansion w = sum_i c_i phi(x_i) with distinct x_i. Labels are
// folded into the signed coefficients, and identical instances are merged
// on insertion, so cancelling terms cancel exactly.
class Embedding {
 public:
  void add(const Vector& x, double coef) {
    if (coef == 0.0) return;
    if (!points_.empty() && x.size() != points_.front().size())
      throw InputError("embedding: dimension mismatch");
    auto key = detail::key_of(x);
    auto it = index_.find(key);
    if (it == index_.end()) {
      index_.emplace(std::move(key), points_.size());
      points_.push_back(x);
      coef_.push_back(coef);
    } else {
      coef_[it->second] += coef;
    }
  }

  void add(const Embedding& other, double scale) {
    for (std::size_t i = 0; i < other.size(); ++i) add(other.points_[i], scale * other.coef_[i]);
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Vector>& points() const { return points_; }
  const std::vector<double>& coef() const { return coef_; }

 private:
  std::vector<Vector> points_;
  std::vector<double> coef_;
  std::map<std::vector<double>, std::size_t> index_;
};

inline Embedding embedding_of(const LabeledSample& s) {
  Embedding e;
  const double w = 1.0 / static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) e.add(s.x(i), w * s.y(i));
  return e;
}

inline Embedding embedding_of(const DiscreteDistribution& p) {
  Embedding e;
  for (std::size_t i = 0; i < p.size(); ++i) e.add(p.atom(i).x, p.prob()[i] * p.atom(i).y);
  return e;
}

// a * ea + b * eb
inline Embedding combine(const Embedding& ea, double a, const Embedding& eb, double b) {
  Embedding out;
  out.add(ea, a);
  out.add(eb, b);
  return out;
}

inline double embedding_inner(const KernelSpec& k, const Embedding& a, const Embedding& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) row += b.coef()[j] * eval_kernel(k, a.points()[i], b.points()[j]);
    total += a.coef()[i] * row;
  }
  return total;
}

// Squared norm of the expansion. Values in [-1e-12, 0) are rounding and
// clamp to zero; anything more negative means K is not PSD.
inline double embedding_norm_squared(const KernelSpec& k, const Embedding& e, unsigned workers = 1) {
  std::vector<double> rows(e.size(), 0.0);
  parallel_for(e.size(), workers, [&](std::size_t i) {
    double row = 0.0;
    for (std::size_t j = i + 1; j < e.size(); ++j)
      row += e.coef()[j] * eval_kernel(k, e.points()[i], e.points()[j]);
    const double ci = e.coef()[i];
    rows[i] = ci * (ci * eval_kernel(k, e.points()[i], e.points()[i]) + 2.0 * row);
  });
  double q = 0.0;
  for (double r : rows) q += r;
  if (q < 0.0) {
    if (q >= -1e-12) return 0.0;
    throw ConsistencyError("negative squared norm " + std::to_string(q) + ": kernel is not PSD");
  }
  return q;
}

inline double embedding_norm(const KernelSpec& k, const Embedding& e, unsigned workers = 1) {
  return std::sqrt(embedding_norm_squared(k, e, workers));
}

inline double embedding_distance(const KernelSpec& k, const Embedding& a, const Embedding& b,
                                 unsigned workers = 1) {
  return embedding_norm(k, combine(a, 1.0, b, -1.0), workers);
}

// <w, phi(x)>
inline double embedding_score(const KernelSpec& k, const Embedding& e, const Vector& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) s += e.coef()[i] * eval_kernel(k, e.points()[i], x);
  return s;
}

struct SupportPoint {
  double alpha = 0.0;
  int y = 1;
  Vector x;
};

class MeanClassifier {
 public:
  MeanClassifier() = default;
  MeanClassifier(KernelSpec kernel, std::vector<SupportPoint> support)
      : kernel_(kernel), support_(std::move(support)) {
    kernel_.validate();
    if (support_.empty()) throw InputError("classifier needs at least one support point");
    long double total = 0.0L;
    for (const auto& s : support_) {
      check_label(s.y);
      if (!(s.alpha >= 0.0)) throw InputError("support weights must be non-negative");
      if (s.x.size() != support_.front().x.size()) throw InputError("support points must share one dimension");
      total += s.alpha;
    }
    if (std::abs(static_cast<double>(total) - 1.0) > 1e-12)
      throw InputError("support weights must sum to 1");
  }

  // Rescales arbitrary non-negative weights to sum to one.
  static MeanClassifier from_weights(KernelSpec kernel, std::vector<SupportPoint> support) {
    long double total = 0.0L;
    for (const auto& s : support) {
      if (!(s.alpha >= 0.0)) throw InputError("support weights must be non-negative");
      total += s.alpha;
    }
    if (!(total > 0.0L)) throw InputError("support weights sum to zero");
    for (auto& s : support) s.alpha = static_cast<double>(s.alpha / total);
    return {kernel, std::move(support)};
  }

  const KernelSpec& kernel() const { return kernel_; }
  const std::vector<SupportPoint>& support() const { return support_; }
  Eigen::Index dim() const { return support_.front().x.size(); }

  double score(const Vector& x) const {
    if (x.size() != dim()) throw InputError("score: dimension mismatch");
    double s = 0.0;
    for (const auto& p : support_) s += p.alpha * p.y * eval_kernel(kernel_, p.x, x);
    return s;
  }
  double operator()(const Vector& x) const { return score(x); }

  // -1, 0 (abstain) or +1.
  int label(const Vector& x) const {
    const double s = score(x);
    return s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
  }

  Embedding embedding() const {
    Embedding e;
    for (const auto& p : support_) e.add(p.x, p.alpha * p.y);
    return e;
  }

 private:
  KernelSpec kernel_;
  std::vector<SupportPoint> support_;
};

// Uniform weights 1/n over the sample.
inline MeanClassifier fit(const LabeledSample& s, const KernelSpec& kernel) {
  if (s.size() == 0) throw InputError("fit: empty sample");
  std::vector<SupportPoint> support;
  support.reserve(s.size());
  const double w = 1.0 / static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) support.push_back({w, s.y(i), s.x(i)});
  return {kernel, std::move(support)};
}

// Population version: atoms weighted by their probability.
inline MeanClassifier fit(const DiscreteDistribution& p, const KernelSpec& kernel) {
  std::vector<SupportPoint> support;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.prob()[i] > 0.0) support.push_back({p.prob()[i], p.atom(i).y, p.atom(i).x});
  return MeanClassifier::from_weights(kernel, std::move(support));
}

struct MeanGeometry {
  double norm = 0.0;             // ||w_S||
  double self_similarity = 0.0;  // ||w_S||^2
  double min_linear_loss = 1.0;  // 1 - ||w_S||
};

inline MeanGeometry geometry_of(const KernelSpec& kernel, const Embedding& e, unsigned workers = 1) {
  MeanGeometry g;
  g.self_similarity = embedding_norm_squared(kernel, e, workers);
  g.norm = std::sqrt(g.self_similarity);
  g.min_linear_loss = 1.0 - g.norm;
  return g;
}

inline MeanGeometry mean_norm(const LabeledSample& s, const KernelSpec& kernel, unsigned workers = 1) {
  kernel.validate();
  return geometry_of(kernel, embedding_of(s), workers);
}

inline MeanGeometry mean_norm(const DiscreteDistribution& p, const KernelSpec& kernel, unsigned workers = 1) {
  kernel.validate();
  return geometry_of(kernel, embedding_of(p), workers);
}

struct KernelSelection {
  std::size_t index = 0;
  std::vector<double> min_losses;  // 1 - ||w_S^i|| per kernel
};

// argmin_i 1 - ||w_S^i||; ties go to the lowest index.
inline KernelSelection select_kernel(const LabeledSample& s, const std::vector<KernelSpec>& kernels,
                                     unsigned workers = 1) {
  if (kernels.empty()) throw InputError("select_kernel: empty kernel menu");
  KernelSelection sel;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    sel.min_losses.push_back(mean_norm(s, kernels[i], workers).min_linear_loss);
    if (sel.min_losses[i] < sel.min_losses[sel.index]) sel.index = i;
  }
  return sel;
}

// MMD = ||w_{P+} - w_{P-}|| / 2 between the empirical instance distributions.
inline double mmd(const std::vector<Vector>& pos, const std::vector<Vector>& neg,
                  const KernelSpec& kernel, unsigned workers = 1) {
  if (pos.empty() || neg.empty()) throw InputError("mmd: both instance lists must be non-empty");
  kernel.validate();
  Embedding e;
  for (const auto& x : pos) e.add(x, 1.0 / static_cast<double>(pos.size()));
  for (const auto& x : neg) e.add(x, -1.0 / static_cast<double>(neg.size()));
  return 0.5 * embedding_norm(kernel, e, workers);
}

// Gamma(S, f): on a finite sample, the smallest strictly positive margin
// y f(x), or 0 if there is none.
template <typename Classifier>
double margin_for_error(const LabeledSample& s, const Classifier& f) {
  std::optional<double> best;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double m = s.y(i) * f(s.x(i));
    if (m > 0.0 && (!best || m < *best)) best = m;
  }
  return best.value_or(0.0);
}

// Gamma(P, f) over atoms of positive mass.
template <typename Classifier>
double margin_for_error(const DiscreteDistribution& p, const Classifier& f) {
  std::optional<double> best;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.prob()[i] == 0.0) continue;
    const double m = p.atom(i).y * f(p.atom(i).x);
    if (m > 0.0 && (!best || m < *best)) best = m;
  }
  return best.value_or(0.0);
}

template <typename Classifier>
double margin_risk(const LabeledSample& s, const Classifier& f, double gamma) {
  return empirical_risk(losses::margin(gamma), s, f);
}

template <typename Classifier>
double margin_risk(const DiscreteDistribution& p, const Classifier& f, double gamma) {
  return risk(losses::margin(gamma), p, f);
}

// Class-prior weighted difference of kernel density estimates,
// (n+/n) avg_{S+} K(x, .) - (n-/n) avg_{S-} K(x, .).
inline double kde_score(const LabeledSample& s, const KernelSpec& kernel, const Vector& x) {
  if (kernel.kind != KernelKind::gaussian) throw InputError("kde_score needs a positive (gaussian) kernel");
  double sum_pos = 0.0, sum_neg = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double k = eval_kernel(kernel, s.x(i), x);
    if (s.y(i) == 1) {
      sum_pos += k;
      ++n_pos;
    } else {
      sum_neg += k;
      ++n_neg;
    }
  }
  if (n_pos == 0 || n_neg == 0) throw InputError("kde_score needs both classes present");
  const double n = static_cast<double>(s.size());
  return (n_pos / n) * (sum_pos / n_pos) - (n_neg / n) * (sum_neg / n_neg);
}

// Model file:
// {"kernel": {...}, "support": [{"alpha": a, "y": 1, "x": [...]}, ...],
//  "meta": {"n_source": n, "norm": ||w_S||, ...}}
inline nlohmann::json model_to_json(const MeanClassifier& clf, const nlohmann::json& meta = nlohmann::json::object()) {
  auto support = nlohmann::json::array();
  for (const auto& p : clf.support())
    support.push_back({{"alpha", p.alpha}, {"y", p.y}, {"x", detail::key_of(p.x)}});
  return {{"kernel", clf.kernel()}, {"support", support}, {"meta", meta}};
}

inline MeanClassifier model_from_json(const nlohmann::json& j) {
  try {
    auto kernel = j.at("kernel").get<KernelSpec>();
    std::vector<SupportPoint> support;
    for (const auto& s : j.at("support")) {
      auto xs = s.at("x").get<std::vector<double>>();
      support.push_back({s.at("alpha").get<double>(), s.at("y").get<int>(),
                         Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()))});
    }
    return {kernel, std::move(support)};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model JSON: ") + e.what());
  }
}

}  // namespace kmc
