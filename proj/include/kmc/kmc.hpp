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

#pragma once

#include "kmc/bounds.hpp"
#include "kmc/data.hpp"
#include "kmc/error.hpp"
#include "kmc/herding.hpp"
#include "kmc/io.hpp"
#include "kmc/kernel.hpp"
#include "kmc/lab.hpp"
#include "kmc/loss.hpp"
#include "kmc/mean_classifier.hpp"
