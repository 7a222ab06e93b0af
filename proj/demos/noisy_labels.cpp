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

// Trains the mean classifier on blob data with and without symmetric label
// noise, then compresses it with kernel herding.
//
//   kmc_demo [sigma] [epsilon]

#include <cstdlib>
#include <iostream>
#include <random>

#include "kmc/kmc.hpp"

int main(int argc, char** argv) {
  const double sigma = argc > 1 ? std::atof(argv[1]) : 0.3;
  const double epsilon = argc > 2 ? std::atof(argv[2]) : 0.01;
  const auto kernel = kmc::KernelSpec::gaussian(1.0);

  const auto train = kmc::synth_blobs(2000, 2, 4.0, 0);
  const auto test = kmc::synth_blobs(2000, 2, 4.0, 1);

  std::mt19937_64 rng(2);
  std::bernoulli_distribution flip(sigma);
  std::vector<int> noisy = train.labels();
  for (int& y : noisy)
    if (flip(rng)) y = -y;
  const kmc::LabeledSample noisy_train(train.instances(), noisy, "blobs+noise");

  const auto clean = kmc::fit(train, kernel);
  const auto dirty = kmc::fit(noisy_train, kernel);
  std::cout << "test accuracy, clean labels:        " << kmc::lab::accuracy(clean, test) << "\n";
  std::cout << "test accuracy, " << sigma << " of labels flipped: " << kmc::lab::accuracy(dirty, test) << "\n";

  kmc::HerdingConfig cfg;
  cfg.tolerance = epsilon;
  const auto h = kmc::herd(train, kernel, cfg);
  const auto sparse = kmc::herd_to_classifier(h, train, kernel);
  std::cout << "herd of " << h.size() << " points (error " << h.error << "), test accuracy "
            << kmc::lab::accuracy(sparse, test) << "\n";
  return 0;
}
