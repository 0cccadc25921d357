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

// Active-party perturbation defenses. Gradient defenses (dp, gc, max_norm)
// transform the downstream dL/dH messages; iso perturbs the upstream
// embeddings as received by the active party.

#include <cstdint>
#include <string_view>

#include "bvg/rng.hpp"
#include "bvg/types.hpp"

namespace bvg {

enum class DefenseKind { none, dp, gc, max_norm, iso };

std::string_view to_string(DefenseKind kind);
DefenseKind parse_defense_kind(std::string_view text);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::none;
  double scale = 0.0;     // Gaussian std for dp / iso
  double rate = 1.0;      // kept fraction for gc
  bool gc_per_row = false;
  std::uint64_t seed = 0;

  void validate() const;
  bool acts_on_gradients() const {
    return kind == DefenseKind::dp || kind == DefenseKind::gc || kind == DefenseKind::max_norm;
  }
  bool acts_on_embeddings() const { return kind == DefenseKind::iso; }
};

/// Adds i.i.d. N(0, scale^2) noise to every entry.
Matrix dp_noise(const Matrix& gradient, double scale, Rng& rng);

/// Keeps the ceil(rate * size) largest-magnitude entries (ties -> lower flat
/// index) and zeroes the rest. With `per_row`, the budget is ceil(rate * cols)
/// per row instead of global.
Matrix gradient_compression(const Matrix& gradient, double rate, bool per_row = false);

/// Rescales every nonzero row to the largest row l2-norm in the matrix.
Matrix max_norm_align(const Matrix& gradient);

/// Adds i.i.d. N(0, scale^2) noise to a transmitted embedding matrix.
Matrix iso_noise(const Matrix& embeddings, double scale, Rng& rng);

/// Stateful wrapper owning the defense's random stream for one run.
class Defense {
 public:
  Defense() = default;
  explicit Defense(const DefenseConfig& config);

  const DefenseConfig& config() const { return config_; }
  Matrix on_downstream(const Matrix& gradient);
  Matrix on_upstream(const Matrix& embeddings);

 private:
  DefenseConfig config_;
  Rng rng_;
};

}  // namespace bvg
