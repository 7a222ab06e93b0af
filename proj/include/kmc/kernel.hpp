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

// Kernel functions on real vectors, the label-augmented kernel
// y*y'*K(x,x'), and Gram matrices.
//
// Conventions:
//   linear      K(x,x') = <x,x'>
//   gaussian    K(x,x') = exp(-|x-x'|^2 / (2 h^2))
//   polynomial  K(x,x') = (<x,x'> + c)^d
// With `normalized` set, K(x,x') / sqrt(K(x,x) K(x',x')) is used instead, so
// K(x,x) = 1. A point whose self-similarity is zero (the zero vector under
// the linear kernel) gets K = 1 against an identical vector and 0 otherwise.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "kmc/error.hpp"
#include "kmc/parallel.hpp"

namespace kmc {

using Vector = Eigen::VectorXd;

enum class KernelKind { linear, gaussian, polynomial };

inline std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::polynomial: return "polynomial";
  }
  return "?";
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "linear") return KernelKind::linear;
  if (s == "gaussian") return KernelKind::gaussian;
  if (s == "polynomial") return KernelKind::polynomial;
  throw InputError("unknown kernel kind '" + s + "'");
}

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double bandwidth = 1.0;  // gaussian
  int degree = 2;          // polynomial
  double offset = 0.0;     // polynomial
  bool normalized = false;

  static KernelSpec linear(bool normalized = false) {
    return {KernelKind::linear, 1.0, 2, 0.0, normalized};
  }
  static KernelSpec gaussian(double bandwidth) {
    return {KernelKind::gaussian, bandwidth, 2, 0.0, false};
  }
  static KernelSpec polynomial(int degree, double offset, bool normalized = false) {
    return {KernelKind::polynomial, 1.0, degree, offset, normalized};
  }

  void validate() const {
    if (kind == KernelKind::gaussian && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
      throw InputError("gaussian bandwidth must be positive");
    if (kind == KernelKind::polynomial) {
      if (degree < 1) throw InputError("polynomial degree must be >= 1");
      if (!(offset >= 0.0)) throw InputError("polynomial offset must be non-negative");
    }
  }

  // |K| <= 1 and K(x,x) = 1 are guaranteed.
  bool bounded() const { return normalized || kind == KernelKind::gaussian; }

  bool operator==(const KernelSpec&) const = default;
};

namespace detail {

inline void check_dims(const Vector& x, const Vector& xp) {
  if (x.size() != xp.size())
    throw InputError("dimension mismatch: " + std::to_string(x.size()) + " vs " +
                     std::to_string(xp.size()));
}

inline double raw_kernel(const KernelSpec& spec, const Vector& x, const Vector& xp) {
  switch (spec.kind) {
    case KernelKind::linear:
      return x.dot(xp);
    case KernelKind::gaussian: {
      double d2 = (x - xp).squaredNorm();
      return std::exp(-d2 / (2.0 * spec.bandwidth * spec.bandwidth));
    }
    case KernelKind::polynomial:
      return std::pow(x.dot(xp) + spec.offset, spec.degree);
  }
  return 0.0;
}

}  // namespace detail

inline double eval_kernel(const KernelSpec& spec, const Vector& x, const Vector& xp) {
  detail::check_dims(x, xp);
  double k = detail::raw_kernel(spec, x, xp);
  if (!spec.normalized || spec.kind == KernelKind::gaussian) return k;
  double kxx = detail::raw_kernel(spec, x, x);
  double kpp = detail::raw_kernel(spec, xp, xp);
  if (kxx <= 0.0 || kpp <= 0.0) return x == xp ? 1.0 : 0.0;
  double v = k / std::sqrt(kxx * kpp);
  return std::clamp(v, -1.0, 1.0);
}

inline void check_label(int y) {
  if (y != 1 && y != -1) throw InputError("label must be -1 or +1, got " + std::to_string(y));
}

// The kernel of psi(x,y) = y*phi(x).
inline double eval_label_kernel(const KernelSpec& spec, const Vector& x, int y, const Vector& xp,
                                int yp) {
  check_label(y);
  check_label(yp);
  return static_cast<double>(y * yp) * eval_kernel(spec, x, xp);
}

struct GramMatrix {
  Eigen::MatrixXd entries;
  std::vector<std::size_t> ids;  // position i holds the caller's index of point i

  std::size_t size() const { return ids.size(); }
  double operator()(std::size_t i, std::size_t j) const {
    return entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

// Dense Gram matrix; rows are filled in parallel, each entry computed once
// and mirrored, so the result is exactly symmetric.
inline GramMatrix gram(const KernelSpec& spec, const std::vector<Vector>& points,
                       unsigned workers = 1) {
  spec.validate();
  if (points.empty()) throw InputError("gram: empty point list");
  const auto n = points.size();
  for (const auto& p : points) detail::check_dims(points.front(), p);
  GramMatrix g;
  g.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  g.ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.ids[i] = i;
  parallel_for(n, workers, [&](std::size_t i) {
    for (std::size_t j = i; j < n; ++j) {
      double k = eval_kernel(spec, points[i], points[j]);
      if (!std::isfinite(k)) throw DataError("non-finite kernel value");
      g.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = k;
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      g.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          g.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
  return g;
}

// Gram matrix of the label-augmented kernel.
inline GramMatrix label_gram(const KernelSpec& spec, const std::vector<Vector>& points,
                             const std::vector<int>& labels, unsigned workers = 1) {
  if (labels.size() != points.size()) throw InputError("label_gram: size mismatch");
  for (int y : labels) check_label(y);
  GramMatrix g = gram(spec, points, workers);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j)
      g.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *=
          static_cast<double>(labels[i] * labels[j]);
  return g;
}

// JSON: {"kind": "gaussian", "bandwidth": 1.0, "normalized": true}
inline void to_json(nlohmann::json& j, const KernelSpec& k) {
  j = nlohmann::json{{"kind", to_string(k.kind)}};
  if (k.kind == KernelKind::gaussian) j["bandwidth"] = k.bandwidth;
  if (k.kind == KernelKind::polynomial) {
    j["degree"] = k.degree;
    j["offset"] = k.offset;
  }
  j["normalized"] = k.normalized;
}

inline void from_json(const nlohmann::json& j, KernelSpec& k) {
  try {
    k = KernelSpec{};
    k.kind = kernel_kind_from_string(j.at("kind").get<std::string>());
    k.bandwidth = j.value("bandwidth", 1.0);
    k.degree = j.value("degree", 2);
    k.offset = j.value("offset", 0.0);
    k.normalized = j.value("normalized", false);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad kernel object: ") + e.what());
  }
  k.validate();
}

// Accepts a JSON object or shorthand:
//   linear | gaussian:<h> | polynomial:<d>[:<c>], each optionally
//   followed by ":normalized".
inline KernelSpec parse_kernel(const std::string& text) {
  if (!text.empty() && text.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("bad kernel JSON: ") + e.what());
    }
    return j.get<KernelSpec>();
  }
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.empty()) throw InputError("empty kernel spec");
  bool normalized = false;
  if (parts.size() > 1 && parts.back() == "normalized") {
    normalized = true;
    parts.pop_back();
  }
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw InputError("");
      return v;
    } catch (...) {
      throw InputError("bad number '" + s + "' in kernel spec '" + text + "'");
    }
  };
  KernelSpec k;
  k.kind = kernel_kind_from_string(parts[0]);
  k.normalized = normalized;
  switch (k.kind) {
    case KernelKind::linear:
      if (parts.size() != 1) throw InputError("linear kernel takes no parameters");
      break;
    case KernelKind::gaussian:
      if (parts.size() != 2) throw InputError("expected gaussian:<bandwidth>");
      k.bandwidth = number(parts[1]);
      break;
    case KernelKind::polynomial:
      if (parts.size() < 2 || parts.size() > 3)
        throw InputError("expected polynomial:<degree>[:<offset>]");
      k.degree = static_cast<int>(number(parts[1]));
      if (k.degree != number(parts[1])) throw InputError("polynomial degree must be an integer");
      k.offset = parts.size() == 3 ? number(parts[2]) : 0.0;
      break;
  }
  k.validate();
  return k;
}

}  // namespace kmc
