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

// Binary margin losses l(y, v), corruption-corrected losses, and finite-grid
// checks of the noise-robustness characterizations.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kmc/data.hpp"
#include "kmc/error.hpp"

namespace kmc {

// Declared curvature in v. Corrected losses are only declared affine when
// their base is; anything else is declared non-convex.
enum class Curvature { affine, convex, nonconvex };

class Loss {
 public:
  using Fn = std::function<double(int, double)>;

  Loss(std::string name, Fn fn, Curvature curvature)
      : name_(std::move(name)), fn_(std::move(fn)), curvature_(curvature) {}

  double operator()(int y, double v) const { return fn_(y, v); }
  const std::string& name() const { return name_; }
  Curvature curvature() const { return curvature_; }
  bool convex() const { return curvature_ != Curvature::nonconvex; }

 private:
  std::string name_;
  Fn fn_;
  Curvature curvature_;
};

namespace losses {

inline Loss linear() {
  return {"linear", [](int y, double v) { return 1.0 - y * v; }, Curvature::affine};
}

// Abstaining (v = 0) counts as an error for either label.
inline Loss zero_one() {
  return {"zero-one", [](int y, double v) { return (y * v < 0.0 || v == 0.0) ? 1.0 : 0.0; },
          Curvature::nonconvex};
}

// [[y v < gamma]], with the same v = 0 convention, so margin(0) == zero_one.
inline Loss margin(double gamma) {
  if (!(gamma >= 0.0)) throw InputError("margin must be non-negative");
  std::ostringstream name;
  name << "margin:" << gamma;
  return {name.str(),
          [gamma](int y, double v) { return (y * v < gamma || v == 0.0) ? 1.0 : 0.0; },
          Curvature::nonconvex};
}

inline Loss hinge() {
  return {"hinge", [](int y, double v) { return std::max(0.0, 1.0 - y * v); }, Curvature::convex};
}

inline Loss logistic() {
  return {"logistic",
          [](int y, double v) {
            double z = -y * v;
            return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
          },
          Curvature::convex};
}

inline std::vector<Loss> builtins() {
  return {linear(), zero_one(), hinge(), logistic(), margin(0.5)};
}

}  // namespace losses

// l_sigma(y,v) = ((1 - s) l(y,v) - s l(-y,v)) / (1 - 2 s); unbiased under
// symmetric flips with rate s.
inline Loss correct_sln(const Loss& base, double sigma) {
  if (!(sigma >= 0.0 && sigma < 0.5)) throw InputError("correction rate must lie in [0, 1/2)");
  std::ostringstream name;
  name << "sln-corrected:" << base.name() << ":" << sigma;
  auto curvature = base.curvature() == Curvature::affine ? Curvature::affine : Curvature::nonconvex;
  if (sigma == 0.0) curvature = base.curvature();
  return {name.str(),
          [base, sigma](int y, double v) {
            return ((1.0 - sigma) * base(y, v) - sigma * base(-y, v)) / (1.0 - 2.0 * sigma);
          },
          curvature};
}

// l(y,v) = ((1 - s_{-y}) l(y,v) - s_y l(-y,v)) / (1 - s_{-1} - s_{+1}).
inline Loss correct_cc(const Loss& base, double sigma_neg, double sigma_pos) {
  if (!(sigma_neg >= 0.0 && sigma_pos >= 0.0)) throw InputError("noise rates must be non-negative");
  if (!(sigma_neg + sigma_pos < 1.0)) throw InputError("noise rates must sum to less than 1");
  std::ostringstream name;
  name << "cc-corrected:" << base.name() << ":" << sigma_neg << ":" << sigma_pos;
  auto curvature = base.curvature() == Curvature::affine ? Curvature::affine : Curvature::nonconvex;
  if (sigma_neg == 0.0 && sigma_pos == 0.0) curvature = base.curvature();
  return {name.str(),
          [base, sigma_neg, sigma_pos](int y, double v) {
            const double s_y = y == 1 ? sigma_pos : sigma_neg;
            const double s_other = y == 1 ? sigma_neg : sigma_pos;
            return ((1.0 - s_other) * base(y, v) - s_y * base(-y, v)) /
                   (1.0 - sigma_neg - sigma_pos);
          },
          curvature};
}

// Names: linear, hinge, logistic, zero-one, margin:<g>,
// sln-corrected:<base>:<s>, cc-corrected:<base>:<s-1>:<s+1>. Bases may
// themselves be any of these names.
inline Loss parse_loss(const std::string& text) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (...) {
    }
    throw InputError("bad number '" + s + "' in loss '" + text + "'");
  };
  if (text == "linear") return losses::linear();
  if (text == "hinge") return losses::hinge();
  if (text == "logistic") return losses::logistic();
  if (text == "zero-one") return losses::zero_one();
  const std::string margin = "margin:", sln = "sln-corrected:", cc = "cc-corrected:";
  if (text.rfind(margin, 0) == 0) return losses::margin(number(text.substr(margin.size())));
  if (text.rfind(sln, 0) == 0) {
    auto rest = text.substr(sln.size());
    auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw InputError("expected sln-corrected:<base>:<sigma>");
    return correct_sln(parse_loss(rest.substr(0, colon)), number(rest.substr(colon + 1)));
  }
  if (text.rfind(cc, 0) == 0) {
    auto rest = text.substr(cc.size());
    auto c2 = rest.rfind(':');
    if (c2 == std::string::npos || c2 == 0) throw InputError("expected cc-corrected:<base>:<s-1>:<s+1>");
    auto c1 = rest.rfind(':', c2 - 1);
    if (c1 == std::string::npos) throw InputError("expected cc-corrected:<base>:<s-1>:<s+1>");
    return correct_cc(parse_loss(rest.substr(0, c1)), number(rest.substr(c1 + 1, c2 - c1 - 1)),
                      number(rest.substr(c2 + 1)));
  }
  throw InputError("unknown loss '" + text + "'");
}

// Finite stand-in for "for all v": k * step for k = -N..N, N = round(V/step).
class EvaluationGrid {
 public:
  EvaluationGrid(double half_width = 3.0, double step = 0.01) : half_width_(half_width), step_(step) {
    if (!(half_width > 0.0 && step > 0.0)) throw InputError("grid needs positive width and step");
    const auto n = static_cast<long>(std::llround(half_width / step));
    if (n < 1) throw InputError("grid step larger than its half width");
    values_.reserve(static_cast<std::size_t>(2 * n + 1));
    for (long k = -n; k <= n; ++k) values_.push_back(static_cast<double>(k) * step);
  }
  const std::vector<double>& values() const { return values_; }
  double half_width() const { return half_width_; }
  double step() const { return step_; }

 private:
  double half_width_;
  double step_;
  std::vector<double> values_;
};

// Exact expectation over a finite support. `f` maps an instance to a score.
template <typename Classifier>
double risk(const Loss& loss, const DiscreteDistribution& p, const Classifier& f) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.prob()[i] == 0.0) continue;
    total += p.prob()[i] * loss(p.atom(i).y, f(p.atom(i).x));
  }
  return total;
}

template <typename Classifier>
double empirical_risk(const Loss& loss, const LabeledSample& s, const Classifier& f) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) total += loss(s.y(i), f(s.x(i)));
  return total / static_cast<double>(s.size());
}

template <typename Classifier>
double expected_loss(const Loss& loss, const InstanceDistribution& p, int y, const Classifier& f) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.prob()[i] != 0.0) total += p.prob()[i] * loss(y, f(p.support()[i]));
  return total;
}

// BER = E_{P+} l(1, f) / 2 + E_{P-} l(-1, f) / 2.
template <typename Classifier>
double balanced_error(const Loss& loss, const InstanceDistribution& pos,
                      const InstanceDistribution& neg, const Classifier& f) {
  return 0.5 * expected_loss(loss, pos, 1, f) + 0.5 * expected_loss(loss, neg, -1, f);
}

// A distribution over (score, label) pairs, the object losses order.
struct ScoreDistribution {
  std::vector<double> score;
  std::vector<int> label;
  std::vector<double> prob;

  double expected(const Loss& loss) const {
    double total = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) total += prob[i] * loss(label[i], score[i]);
    return total;
  }

  // Q_sigma: each label flipped independently with probability sigma.
  ScoreDistribution flipped(double sigma) const {
    ScoreDistribution out;
    for (std::size_t i = 0; i < prob.size(); ++i) {
      out.score.push_back(score[i]);
      out.label.push_back(label[i]);
      out.prob.push_back((1.0 - sigma) * prob[i]);
      out.score.push_back(score[i]);
      out.label.push_back(-label[i]);
      out.prob.push_back(sigma * prob[i]);
    }
    return out;
  }
};

enum class RobustnessVerdict { robust, not_robust, degenerate };

inline std::string to_string(RobustnessVerdict v) {
  switch (v) {
    case RobustnessVerdict::robust: return "robust";
    case RobustnessVerdict::not_robust: return "not_robust";
    case RobustnessVerdict::degenerate: return "degenerate";
  }
  return "?";
}

struct RobustnessResult {
  RobustnessVerdict verdict = RobustnessVerdict::not_robust;
  std::optional<double> constant;  // C, when robust
  double max_deviation = 0.0;      // max |l(1,v) + l(-1,v) - median|

  bool is_robust() const { return verdict == RobustnessVerdict::robust; }
};

inline constexpr double kConstancyTolerance = 1e-9;

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Returns (median, max deviation from it).
inline std::pair<double, double> constancy(const std::vector<double>& values) {
  double m = median(values);
  double dev = 0.0;
  for (double x : values) dev = std::max(dev, std::abs(x - m));
  return {m, dev};
}

}  // namespace detail

// Robust to symmetric label noise iff l(1,v) + l(-1,v) is constant. Losses
// with l(1,.) == l(-1,.) on the grid fall outside the characterization and
// are reported as degenerate.
inline RobustnessResult sln_robustness_check(const Loss& loss, const EvaluationGrid& grid = {}) {
  std::vector<double> sums;
  bool label_blind = true;
  for (double v : grid.values()) {
    const double a = loss(1, v), b = loss(-1, v);
    sums.push_back(a + b);
    label_blind = label_blind && std::abs(a - b) <= kConstancyTolerance;
  }
  auto [c, dev] = detail::constancy(sums);
  RobustnessResult r;
  r.max_deviation = dev;
  if (label_blind) {
    r.verdict = RobustnessVerdict::degenerate;
  } else if (dev <= kConstancyTolerance) {
    r.verdict = RobustnessVerdict::robust;
    r.constant = c;
  }
  return r;
}

struct AffineFit {
  double alpha = 0.0;
  double beta = 0.0;
  double residual = 0.0;  // max absolute residual over the grid
  bool fittable = false;  // false when l1 is constant on the grid

  bool order_equivalent() const { return fittable && alpha > 0.0 && residual <= kConstancyTolerance; }
};

// Least-squares fit l2 ~ alpha * l1 + beta over {-1,+1} x grid. Two losses
// are order equivalent iff such a fit is exact with alpha > 0.
inline AffineFit order_equivalence_fit(const Loss& l1, const Loss& l2, const EvaluationGrid& grid = {}) {
  std::vector<double> a, b;
  for (int y : {1, -1})
    for (double v : grid.values()) {
      a.push_back(l1(y, v));
      b.push_back(l2(y, v));
    }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  AffineFit fit;
  if (saa <= kConstancyTolerance * kConstancyTolerance * n) return fit;
  fit.fittable = true;
  fit.alpha = sab / saa;
  fit.beta = mb - fit.alpha * ma;
  for (std::size_t i = 0; i < a.size(); ++i)
    fit.residual = std::max(fit.residual, std::abs(b[i] - (fit.alpha * a[i] + fit.beta)));
  return fit;
}

struct ClassConditionalResult {
  bool holds = false;
  std::optional<double> constant;
  double max_deviation = 0.0;
  std::optional<AffineFit> correction_fit;  // set when the weighted sum is constant
};

// Checks s_{+1} l(-1,v) + s_{-1} l(1,v) = C on the grid. When it holds the
// class-conditional correction must be order equivalent to the loss; a
// failure of that implication throws ConsistencyError.
inline ClassConditionalResult cc_ratio_check(const Loss& loss, double sigma_neg, double sigma_pos,
                                             const EvaluationGrid& grid = {}) {
  auto corrected = correct_cc(loss, sigma_neg, sigma_pos);
  std::vector<double> sums;
  for (double v : grid.values()) sums.push_back(sigma_pos * loss(-1, v) + sigma_neg * loss(1, v));
  auto [c, dev] = detail::constancy(sums);
  ClassConditionalResult r;
  r.max_deviation = dev;
  if (dev <= kConstancyTolerance) {
    r.holds = true;
    r.constant = c;
    r.correction_fit = order_equivalence_fit(loss, corrected, grid);
    if (!r.correction_fit->order_equivalent())
      throw ConsistencyError("weighted sum is constant but the corrected loss is not order equivalent");
  }
  return r;
}

}  // namespace kmc
