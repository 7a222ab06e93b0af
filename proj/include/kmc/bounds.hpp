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

// Closed-form generalization bounds for the linear loss of the mean
// classifier and for mean estimation.

#pragma once

#include <cmath>
#include <optional>

#include "kmc/error.hpp"

namespace kmc::bounds {

namespace detail {

inline void check_n_delta(double n, double delta) {
  if (!(n >= 1.0)) throw InputError("sample size n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("confidence delta must lie in (0, 1)");
}

}  // namespace detail

// emp + sqrt(2 (1 + log(1/delta)) / n)
inline double pac_bayes(double emp_loss, double n, double delta) {
  detail::check_n_delta(n, delta);
  return emp_loss + std::sqrt(2.0 * (1.0 + std::log(1.0 / delta)) / n);
}

// Selection over k kernels: emp + sqrt(2 (1 + log k + log(1/delta)) / n)
inline double pac_bayes_multi(double emp_loss, double n, double k, double delta) {
  detail::check_n_delta(n, delta);
  if (!(k >= 1.0)) throw InputError("number of kernels k must be >= 1");
  return emp_loss + std::sqrt(2.0 * (1.0 + std::log(k) + std::log(1.0 / delta)) / n);
}

// ||w_P - w_S|| <= 2/sqrt(n) + sqrt(log(2/delta) / (2n))
inline double mean_estimation(double n, double delta) {
  detail::check_n_delta(n, delta);
  return 2.0 / std::sqrt(n) + std::sqrt(std::log(2.0 / delta) / (2.0 * n));
}

// emp + (kl + log(1/delta)) / (beta n) + beta. Without beta the minimizing
// beta* = sqrt((kl + log(1/delta)) / n) is used, giving
// emp + 2 sqrt((kl + log(1/delta)) / n).
inline double generic_pac_bayes(double emp_loss, double kl, double n, double delta,
                                std::optional<double> beta = std::nullopt) {
  detail::check_n_delta(n, delta);
  if (!(kl >= 0.0)) throw InputError("divergence term must be non-negative");
  const double c = kl + std::log(1.0 / delta);
  if (!beta) return emp_loss + 2.0 * std::sqrt(c / n);
  if (!(*beta > 0.0)) throw InputError("temperature beta must be positive");
  return emp_loss + c / (*beta * n) + *beta;
}

inline double optimal_beta(double kl, double n, double delta) {
  detail::check_n_delta(n, delta);
  return std::sqrt((kl + std::log(1.0 / delta)) / n);
}

}  // namespace kmc::bounds
