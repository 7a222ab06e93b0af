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

// Kernel herding: Frank-Wolfe over the convex hull of the label-augmented
// features psi(x, y) = y phi(x) of a candidate set, approximating a target
// mean w_P = sum_j w_j psi(z_j) by a sparse convex combination.
//
// Everything is computed through kernel sums over the candidates:
//   c(z')   = sum_j w_j K(z_j, z')          target column means
//   g(z')   = sum_i a_i K(z_i, z')          current herd
//   err^2   = sum_j (w_j - a_j) (c_j - g_j)
// The greedy step picks argmax_z' c(z') - g(z') (lowest index on ties) and
// the line search moves to the exact minimizer of the quadratic objective on
// the segment towards psi(z*), clipped to [0, 1].

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kmc/data.hpp"
#include "kmc/error.hpp"
#include "kmc/kernel.hpp"
#include "kmc/mean_classifier.hpp"
#include "kmc/parallel.hpp"

namespace kmc {

// fully_corrective and away_step are reserved for the Frank-Wolfe variants
// that re-optimize or drop existing herd members; herd() rejects them.
enum class StepRule { line_search, uniform, fully_corrective, away_step };
enum class KernelCache { dense, lazy };
enum class StopReason { tolerance, max_iterations, stationary };

inline std::string to_string(StepRule r) {
  switch (r) {
    case StepRule::line_search: return "line_search";
    case StepRule::uniform: return "uniform";
    case StepRule::fully_corrective: return "fully_corrective";
    case StepRule::away_step: return "away_step";
  }
  return "?";
}

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::stationary: return "stationary";
  }
  return "?";
}

struct HerdingConfig {
  double tolerance = 0.01;
  std::size_t max_iterations = 100000;
  StepRule step_rule = StepRule::line_search;
  KernelCache cache = KernelCache::dense;
  unsigned workers = 1;

  void validate() const {
    if (!(tolerance > 0.0)) throw InputError("herding tolerance must be positive");
    if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
    if (step_rule == StepRule::fully_corrective || step_rule == StepRule::away_step)
      throw InputError("step rule '" + to_string(step_rule) + "' is not supported");
  }
};

struct HerdMember {
  double alpha = 0.0;
  std::size_t index = 0;
};

struct Herd {
  std::vector<HerdMember> members;  // alpha > 0, in order of first selection
  double error = 0.0;               // ||w_P - w~||
  std::vector<double> trace;        // error after each iteration
  std::vector<std::size_t> sizes;   // herd size after each iteration
  std::vector<std::size_t> selections;  // candidate chosen at each iteration
  std::size_t iterations = 0;
  StopReason stop = StopReason::tolerance;

  std::size_t size() const { return members.size(); }
  bool reached_tolerance() const { return stop == StopReason::tolerance; }
};

namespace detail {

// Rows of the label-augmented kernel matrix, either fully materialized or
// computed on demand (only rows of selected candidates are kept).
class KernelRows {
 public:
  KernelRows(const KernelSpec& k, const std::vector<Vector>& xs, const std::vector<int>& ys,
             KernelCache mode, unsigned workers)
      : kernel_(k), xs_(xs), ys_(ys), mode_(mode), workers_(workers) {
    if (mode_ == KernelCache::dense) dense_ = label_gram(k, xs, ys, workers).entries;
  }

  std::size_t size() const { return xs_.size(); }

  const double* row(std::size_t i) {
    if (mode_ == KernelCache::dense) return dense_.data() + static_cast<Eigen::Index>(i) * dense_.rows();
    auto it = lazy_.find(i);
    if (it != lazy_.end()) return it->second.data();
    std::vector<double> r(size());
    parallel_for(size(), workers_, [&](std::size_t j) { r[j] = entry(i, j); });
    return lazy_.emplace(i, std::move(r)).first->second.data();
  }

  // c_j = sum_i w_i K(z_i, z_j)
  std::vector<double> weighted_column_sums(const std::vector<double>& w) {
    const std::size_t n = size();
    std::vector<double> c(n, 0.0);
    parallel_for(n, workers_, [&](std::size_t j) {
      double s = 0.0;
      if (mode_ == KernelCache::dense) {
        const double* col = dense_.data() + static_cast<Eigen::Index>(j) * dense_.rows();
        for (std::size_t i = 0; i < n; ++i) s += w[i] * col[i];
      } else {
        for (std::size_t i = 0; i < n; ++i)
          if (w[i] != 0.0) s += w[i] * entry(i, j);
      }
      c[j] = s;
    });
    return c;
  }

 private:
  double entry(std::size_t i, std::size_t j) const {
    double k = static_cast<double>(ys_[i] * ys_[j]) * eval_kernel(kernel_, xs_[i], xs_[j]);
    if (!std::isfinite(k)) throw DataError("non-finite kernel value");
    return k;
  }

  KernelSpec kernel_;
  const std::vector<Vector>& xs_;
  const std::vector<int>& ys_;
  KernelCache mode_;
  unsigned workers_;
  Eigen::MatrixXd dense_;
  std::map<std::size_t, std::vector<double>> lazy_;
};

inline std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < v.size(); ++j)
    if (v[j] > v[best]) best = j;
  return best;
}

inline double residual_error(const std::vector<double>& target, const std::vector<double>& alpha,
                             const std::vector<double>& c, const std::vector<double>& g) {
  double e2 = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j) e2 += (target[j] - alpha[j]) * (c[j] - g[j]);
  return std::sqrt(std::max(0.0, e2));
}

inline void check_candidates(const std::vector<Vector>& xs, const std::vector<int>& ys,
                             const std::vector<double>& w) {
  if (xs.empty()) throw InputError("herd: empty candidate set");
  if (xs.size() != ys.size() || xs.size() != w.size()) throw InputError("herd: size mismatch");
  long double total = 0.0L;
  for (double wi : w) {
    if (!(wi >= 0.0)) throw InputError("herd: target weights must be non-negative");
    total += wi;
  }
  if (std::abs(static_cast<double>(total) - 1.0) > 1e-12) throw InputError("herd: target weights must sum to 1");
}

}  // namespace detail

// Herds candidates (xs[j], ys[j]) towards the target sum_j w[j] psi(z_j).
inline Herd herd_weighted(const std::vector<Vector>& xs, const std::vector<int>& ys,
                          const std::vector<double>& w, const KernelSpec& kernel,
                          const HerdingConfig& config) {
  config.validate();
  kernel.validate();
  detail::check_candidates(xs, ys, w);
  const std::size_t n = xs.size();
  detail::KernelRows rows(kernel, xs, ys, config.cache, config.workers);
  const std::vector<double> c = rows.weighted_column_sums(w);

  Herd h;
  std::vector<double> alpha(n, 0.0), g(n, 0.0);
  std::vector<std::size_t> order;
  auto record = [&](double err) {
    h.error = err;
    h.trace.push_back(err);
    h.sizes.push_back(order.size());
  };

  // Initialization: the candidate most similar on average to the target.
  std::size_t z = detail::argmax_lowest(c);
  alpha[z] = 1.0;
  const double* kz = rows.row(z);
  std::copy(kz, kz + n, g.begin());
  order.push_back(z);
  h.selections.push_back(z);
  h.iterations = 1;
  record(detail::residual_error(w, alpha, c, g));

  std::vector<double> d(n), next_alpha(n), next_g(n);
  while (true) {
    if (h.error <= config.tolerance) {
      h.stop = StopReason::tolerance;
      break;
    }
    if (h.iterations >= config.max_iterations) {
      h.stop = StopReason::max_iterations;
      break;
    }
    for (std::size_t j = 0; j < n; ++j) d[j] = c[j] - g[j];
    z = detail::argmax_lowest(d);
    kz = rows.row(z);

    double lambda;
    if (config.step_rule == StepRule::uniform) {
      lambda = 1.0 / static_cast<double>(h.iterations + 1);
    } else {
      // <w_P - w~, psi(z) - w~> = d(z) - sum_j a_j d_j
      // ||psi(z) - w~||^2       = K(z,z) - 2 g(z) + sum_j a_j g_j
      double ad = 0.0, ag = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        ad += alpha[j] * d[j];
        ag += alpha[j] * g[j];
      }
      const double num = d[z] - ad;
      const double den = kz[z] - 2.0 * g[z] + ag;
      if (!(den > 0.0) || !(num > 0.0)) {
        h.stop = StopReason::stationary;
        break;
      }
      lambda = std::min(1.0, num / den);
    }

    for (std::size_t j = 0; j < n; ++j) {
      next_alpha[j] = (1.0 - lambda) * alpha[j];
      next_g[j] = (1.0 - lambda) * g[j] + lambda * kz[j];
    }
    next_alpha[z] += lambda;
    const double err = detail::residual_error(w, next_alpha, c, next_g);
    if (config.step_rule == StepRule::line_search && err > h.error) {
      // The exact line search cannot increase the error; an increase is
      // rounding at a stationary point.
      h.stop = StopReason::stationary;
      break;
    }
    alpha.swap(next_alpha);
    g.swap(next_g);
    if (std::find(order.begin(), order.end(), z) == order.end()) order.push_back(z);
    ++h.iterations;
    h.selections.push_back(z);
    record(err);
  }

  for (std::size_t i : order)
    if (alpha[i] > 0.0) h.members.push_back({alpha[i], i});
  if (h.sizes.back() != h.members.size()) h.sizes.back() = h.members.size();
  return h;
}

namespace detail {

inline std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

}  // namespace detail

// Herds a labeled sample towards its own empirical mean w_S.
inline Herd herd(const LabeledSample& s, const KernelSpec& kernel, const HerdingConfig& config) {
  return herd_weighted(s.instances(), s.labels(), detail::uniform_weights(s.size()), kernel, config);
}

// ||w_P - w~|| recomputed from scratch with direct kernel evaluations.
inline double approximation_error(const std::vector<HerdMember>& members, const std::vector<Vector>& xs,
                                  const std::vector<int>& ys, const std::vector<double>& w,
                                  const KernelSpec& kernel, unsigned workers = 1) {
  std::vector<double> r(w);
  for (const auto& m : members) {
    if (m.index >= xs.size()) throw InputError("herd member index out of range");
    r[m.index] -= m.alpha;
  }
  std::vector<std::size_t> nz;
  for (std::size_t j = 0; j < r.size(); ++j)
    if (r[j] != 0.0) nz.push_back(j);
  std::vector<double> rows(nz.size(), 0.0);
  parallel_for(nz.size(), workers, [&](std::size_t a) {
    const std::size_t i = nz[a];
    double s = 0.0;
    for (std::size_t b = a + 1; b < nz.size(); ++b) {
      const std::size_t j = nz[b];
      s += r[j] * ys[j] * eval_kernel(kernel, xs[i], xs[j]);
    }
    rows[a] = r[i] * (r[i] * eval_kernel(kernel, xs[i], xs[i]) + 2.0 * ys[i] * s);
  });
  double e2 = 0.0;
  for (double v : rows) e2 += v;
  return std::sqrt(std::max(0.0, e2));
}

inline double approximation_error(const Herd& h, const LabeledSample& s, const KernelSpec& kernel,
                                  unsigned workers = 1) {
  return approximation_error(h.members, s.instances(), s.labels(), detail::uniform_weights(s.size()),
                             kernel, workers);
}

struct GroupSummary {
  std::size_t begin = 0;  // first candidate position of the group
  std::size_t count = 0;
  double mass = 0.0;      // target mass of the group
  std::size_t herd_size = 0;
  double error = 0.0;     // group herd vs group mean
  StopReason stop = StopReason::tolerance;
};

struct ParallelHerd {
  Herd herd;                       // combined; error recomputed against the full target
  std::vector<GroupSummary> groups;
  std::optional<Herd> reherded;    // set when the combined herd was herded again
};

struct ParallelOptions {
  std::size_t groups = 1;
  bool reherd_combined = false;
  std::optional<std::uint64_t> shuffle_seed;  // permute before forming blocks
};

// Splits the candidates into contiguous, near-equal blocks, herds each block
// towards its own mean and combines the results with weights proportional to
// block mass. The combined error is at most the largest block error.
inline ParallelHerd parallel_herd_weighted(const std::vector<Vector>& xs, const std::vector<int>& ys,
                                           const std::vector<double>& w, const KernelSpec& kernel,
                                           const HerdingConfig& config, const ParallelOptions& opts) {
  config.validate();
  detail::check_candidates(xs, ys, w);
  const std::size_t n = xs.size();
  if (opts.groups < 1 || opts.groups > n) throw InputError("group count must lie in [1, n]");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (opts.shuffle_seed) {
    std::mt19937_64 rng(*opts.shuffle_seed);
    std::shuffle(perm.begin(), perm.end(), rng);
  }

  const std::size_t m = opts.groups;
  ParallelHerd out;
  out.groups.resize(m);
  std::size_t begin = 0;
  for (std::size_t g = 0; g < m; ++g) {
    out.groups[g].begin = begin;
    out.groups[g].count = n / m + (g < n % m ? 1 : 0);
    begin += out.groups[g].count;
  }

  std::vector<Herd> herds(m);
  HerdingConfig inner = config;
  inner.workers = 1;
  parallel_for(m, config.workers, [&](std::size_t g) {
    auto& grp = out.groups[g];
    std::vector<Vector> gx;
    std::vector<int> gy;
    std::vector<double> gw;
    long double mass = 0.0L;
    for (std::size_t k = 0; k < grp.count; ++k) {
      const std::size_t j = perm[grp.begin + k];
      gx.push_back(xs[j]);
      gy.push_back(ys[j]);
      gw.push_back(w[j]);
      mass += w[j];
    }
    grp.mass = static_cast<double>(mass);
    if (grp.mass <= 0.0) return;  // nothing to approximate
    for (double& v : gw) v = static_cast<double>(v / mass);
    herds[g] = herd_weighted(gx, gy, gw, kernel, inner);
    grp.herd_size = herds[g].size();
    grp.error = herds[g].error;
    grp.stop = herds[g].stop;
  });

  Herd& combined = out.herd;
  combined.stop = StopReason::tolerance;
  for (std::size_t g = 0; g < m; ++g) {
    const auto& grp = out.groups[g];
    if (grp.mass <= 0.0) continue;
    for (const auto& mem : herds[g].members)
      combined.members.push_back({mem.alpha * grp.mass, perm[grp.begin + mem.index]});
    combined.iterations += herds[g].iterations;
    combined.selections.insert(combined.selections.end(), herds[g].selections.begin(), herds[g].selections.end());
    if (herds[g].stop != StopReason::tolerance) combined.stop = herds[g].stop;
  }
  if (m == 1) {
    combined.trace = herds[0].trace;
    combined.sizes = herds[0].sizes;
  }
  combined.error = approximation_error(combined.members, xs, ys, w, kernel, config.workers);
  if (m != 1) {
    combined.trace = {combined.error};
    combined.sizes = {combined.size()};
  }

  if (opts.reherd_combined && combined.size() > 1) {
    std::vector<Vector> cx;
    std::vector<int> cy;
    std::vector<double> cw;
    for (const auto& mem : combined.members) {
      cx.push_back(xs[mem.index]);
      cy.push_back(ys[mem.index]);
      cw.push_back(mem.alpha);
    }
    long double total = 0.0L;
    for (double v : cw) total += v;
    for (double& v : cw) v = static_cast<double>(v / total);
    Herd again = herd_weighted(cx, cy, cw, kernel, config);
    for (auto& mem : again.members) mem.index = combined.members[mem.index].index;
    again.error = approximation_error(again.members, xs, ys, w, kernel, config.workers);
    out.reherded = std::move(again);
  }
  return out;
}

inline ParallelHerd parallel_herd(const LabeledSample& s, const KernelSpec& kernel,
                                  const HerdingConfig& config, const ParallelOptions& opts) {
  return parallel_herd_weighted(s.instances(), s.labels(), detail::uniform_weights(s.size()), kernel,
                                config, opts);
}

struct StageSummary {
  std::size_t size = 0;           // herd size after the stage
  double stage_error = 0.0;       // vs the previous stage's weighted set
  double cumulative_error = 0.0;  // vs the original target, recomputed exactly
  std::vector<HerdMember> members;  // indices into the original candidates
};

struct RecursiveHerd {
  Herd herd;  // final herd; error is the exact cumulative error
  std::vector<StageSummary> stages;
};

struct RecursiveOptions {
  std::size_t min_size = 1;
  // When set, each stage is a parallel herd with blocks of at most this many
  // candidates (combined, not re-herded).
  std::optional<std::size_t> max_group_size;
};

// Herds the current weighted set towards its own weighted mean, then herds
// the herd, and so on, until the herd reaches min_size or stops shrinking.
inline RecursiveHerd recursive_herd_weighted(const std::vector<Vector>& xs, const std::vector<int>& ys,
                                             const std::vector<double>& w, const KernelSpec& kernel,
                                             const HerdingConfig& config, const RecursiveOptions& opts) {
  config.validate();
  detail::check_candidates(xs, ys, w);
  if (opts.min_size < 1) throw InputError("min_size must be >= 1");
  if (opts.max_group_size && *opts.max_group_size < 1) throw InputError("max_group_size must be >= 1");

  RecursiveHerd out;
  std::vector<HerdMember> current;
  for (std::size_t j = 0; j < xs.size(); ++j)
    if (w[j] > 0.0) current.push_back({w[j], j});

  while (current.size() > opts.min_size) {
    std::vector<Vector> cx;
    std::vector<int> cy;
    std::vector<double> cw;
    long double total = 0.0L;
    for (const auto& mem : current) {
      cx.push_back(xs[mem.index]);
      cy.push_back(ys[mem.index]);
      cw.push_back(mem.alpha);
      total += mem.alpha;
    }
    for (double& v : cw) v = static_cast<double>(v / total);

    Herd stage;
    if (opts.max_group_size) {
      ParallelOptions po;
      po.groups = std::max<std::size_t>(1, (cx.size() + *opts.max_group_size - 1) / *opts.max_group_size);
      stage = parallel_herd_weighted(cx, cy, cw, kernel, config, po).herd;
    } else {
      stage = herd_weighted(cx, cy, cw, kernel, config);
    }
    if (stage.size() >= current.size()) break;

    std::vector<HerdMember> next;
    for (const auto& mem : stage.members) next.push_back({mem.alpha, current[mem.index].index});
    current = std::move(next);

    StageSummary summary;
    summary.size = current.size();
    summary.stage_error = stage.error;
    summary.cumulative_error = approximation_error(current, xs, ys, w, kernel, config.workers);
    summary.members = current;
    out.stages.push_back(summary);
    out.herd.iterations += stage.iterations;
    out.herd.stop = stage.stop;
  }

  out.herd.members = current;
  out.herd.error = out.stages.empty() ? approximation_error(current, xs, ys, w, kernel, config.workers)
                                      : out.stages.back().cumulative_error;
  for (const auto& st : out.stages) {
    out.herd.trace.push_back(st.cumulative_error);
    out.herd.sizes.push_back(st.size);
  }
  return out;
}

inline RecursiveHerd recursive_herd(const LabeledSample& s, const KernelSpec& kernel,
                                    const HerdingConfig& config, const RecursiveOptions& opts) {
  return recursive_herd_weighted(s.instances(), s.labels(), detail::uniform_weights(s.size()), kernel,
                                 config, opts);
}

// Sparse classifier with the herd's weights. For any x with ||phi(x)|| <= 1,
// |f(x) - f~(x)| <= herd error.
inline MeanClassifier herd_to_classifier(const Herd& h, const LabeledSample& s, const KernelSpec& kernel) {
  std::vector<SupportPoint> support;
  for (const auto& m : h.members) {
    if (m.index >= s.size()) throw InputError("herd member index out of range");
    support.push_back({m.alpha, s.y(m.index), s.x(m.index)});
  }
  return MeanClassifier::from_weights(kernel, std::move(support));
}

struct ConvergenceReport {
  bool monotone = true;
  double fitted_rate = 0.0;  // slope of log(error) per iteration
};

inline ConvergenceReport convergence_report(const std::vector<double>& trace) {
  if (trace.size() < 3) throw InputError("convergence_report needs at least 3 trace entries");
  ConvergenceReport r;
  for (std::size_t t = 1; t < trace.size(); ++t)
    if (trace[t] > trace[t - 1]) r.monotone = false;
  std::size_t m = 0;
  while (m < trace.size() && trace[m] > 0.0) ++m;
  if (m < 2) return r;
  double mx = 0.0, my = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    mx += static_cast<double>(t);
    my += std::log(trace[t]);
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    const double dx = static_cast<double>(t) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(trace[t]) - my);
  }
  r.fitted_rate = sxy / sxx;
  return r;
}

// {"kernel": {...}, "members": [{"alpha": a, "index": i}], "error": e, "trace": [...]}
inline nlohmann::json herd_to_json(const Herd& h, const KernelSpec& kernel) {
  auto members = nlohmann::json::array();
  for (const auto& m : h.members) members.push_back({{"alpha", m.alpha}, {"index", m.index}});
  return {{"kernel", kernel},
          {"members", members},
          {"error", h.error},
          {"trace", h.trace},
          {"iterations", h.iterations},
          {"stop_reason", to_string(h.stop)}};
}

inline Herd herd_from_json(const nlohmann::json& j) {
  Herd h;
  try {
    for (const auto& m : j.at("members"))
      h.members.push_back({m.at("alpha").get<double>(), m.at("index").get<std::size_t>()});
    h.error = j.at("error").get<double>();
    h.trace = j.value("trace", std::vector<double>{});
    h.iterations = j.value("iterations", h.trace.size());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad herd JSON: ") + e.what());
  }
  return h;
}

// iteration,error,herd_size
inline std::string trace_csv(const Herd& h) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,error,herd_size\n";
  for (std::size_t t = 0; t < h.trace.size(); ++t)
    os << (t + 1) << ',' << h.trace[t] << ',' << (t < h.sizes.size() ? h.sizes[t] : 0) << '\n';
  return os.str();
}

}  // namespace kmc
