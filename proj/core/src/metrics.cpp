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
#include "bvg/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "bvg/error.hpp"

namespace bvg {

double compute_mta(std::span<const int> predictions, std::span<const int> true_labels,
                   std::span<const NodeId> test_set) {
  if (test_set.empty()) throw ValidationError("MTA is undefined on an empty test set");
  if (predictions.size() != test_set.size()) {
    throw ContractError(fmt::format("{} predictions for {} test nodes", predictions.size(),
                                    test_set.size()));
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto v = static_cast<std::size_t>(test_set[i]);
    if (v >= true_labels.size()) throw ContractError(fmt::format("test node {} has no label", v));
    correct += predictions[i] == true_labels[v] ? 1 : 0;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test_set.size());
}

double compute_asr(std::span<const int> predictions, int target_class,
                   std::span<const NodeId> eligible_set) {
  if (eligible_set.empty()) throw ValidationError("ASR is undefined on an empty eligible set");
  if (predictions.size() != eligible_set.size()) {
    throw ContractError(fmt::format("{} predictions for {} eligible nodes", predictions.size(),
                                    eligible_set.size()));
  }
  std::size_t hits = 0;
  for (int p : predictions) hits += p == target_class ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(eligible_set.size());
}

NodeSet asr_eligible(std::span<const NodeId> test_set, std::span<const int> true_labels,
                     int target_class, bool include_target) {
  NodeSet out;
  for (NodeId v : test_set) {
    if (include_target || true_labels[static_cast<std::size_t>(v)] != target_class) out.push_back(v);
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()), 0);
  for (Index r = 0; r < logits.rows(); ++r) {
    int best = 0;
    for (Index c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = static_cast<int>(c);
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

}  // namespace bvg
