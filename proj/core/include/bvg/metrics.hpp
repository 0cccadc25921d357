/*
 * Copyright 2026 The bvgsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <span>
#include <vector>

#include "bvg/types.hpp"

namespace bvg {

/// Clean accuracy in percent. `predictions[i]` is the prediction for
/// `test_set[i]`; `true_labels` is indexed by node id.
double compute_mta(std::span<const int> predictions, std::span<const int> true_labels,
                   std::span<const NodeId> test_set);

/// Percent of `eligible_set` predicted as `target_class`; `predictions` is
/// aligned with `eligible_set`.
double compute_asr(std::span<const int> predictions, int target_class,
                   std::span<const NodeId> eligible_set);

/// Test nodes that count towards ASR. By default nodes truly labeled
/// `target_class` are excluded.
NodeSet asr_eligible(std::span<const NodeId> test_set, std::span<const int> true_labels,
                     int target_class, bool include_target = false);

/// Row argmax; ties go to the lowest column.
std::vector<int> argmax_rows(const Matrix& logits);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for fewer than two values
};

MeanStd mean_std(std::span<const double> values);

}  // namespace bvg
