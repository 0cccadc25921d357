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
#include "bvg/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "bvg/error.hpp"

namespace bvg {
namespace {

Index kept_count(double rate, Index size) {
  const auto k = static_cast<Index>(std::ceil(rate * static_cast<double>(size) - 1e-12));
  return std::clamp<Index>(k, 0, size);
}

// Zeroes all but the `keep` largest |values| in [first, first + count).
void keep_top(double* values, Index count, Index keep) {
  if (keep >= count) return;
  std::vector<Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Index{0});
  auto larger = [values](Index a, Index b) {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(order.begin(), order.begin() + keep, order.end(), larger);
  for (auto it = order.begin() + keep; it != order.end(); ++it) values[*it] = 0.0;
}

Matrix add_gaussian(const Matrix& m, double scale, Rng& rng) {
  std::normal_distribution<double> noise(0.0, scale);
  Matrix out = m;
  for (Index i = 0; i < out.size(); ++i) out.data()[i] += noise(rng);
  return out;
}

}  // namespace

std::string_view to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::none: return "none";
    case DefenseKind::dp: return "dp";
    case DefenseKind::gc: return "gc";
    case DefenseKind::max_norm: return "max_norm";
    case DefenseKind::iso: return "iso";
  }
  return "unknown";
}

DefenseKind parse_defense_kind(std::string_view text) {
  for (DefenseKind k : {DefenseKind::none, DefenseKind::dp, DefenseKind::gc, DefenseKind::max_norm,
                        DefenseKind::iso}) {
    if (text == to_string(k)) return k;
  }
  throw ValidationError(
      fmt::format("unknown defense '{}' (expected none, dp, gc, max_norm or iso)", text));
}

void DefenseConfig::validate() const {
  if ((kind == DefenseKind::dp || kind == DefenseKind::iso) && !(scale > 0.0)) {
    throw ValidationError(fmt::format("{} defense needs scale > 0, got {}", to_string(kind), scale));
  }
  if (kind == DefenseKind::gc && !(rate > 0.0 && rate <= 1.0)) {
    throw ValidationError(fmt::format("gc rate must lie in (0, 1], got {}", rate));
  }
}

Matrix dp_noise(const Matrix& gradient, double scale, Rng& rng) {
  return add_gaussian(gradient, scale, rng);
}

Matrix iso_noise(const Matrix& embeddings, double scale, Rng& rng) {
  return add_gaussian(embeddings, scale, rng);
}

Matrix gradient_compression(const Matrix& gradient, double rate, bool per_row) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw ValidationError(fmt::format("gc rate must lie in (0, 1], got {}", rate));
  }
  Matrix out = gradient;
  if (per_row) {
    const Index keep = kept_count(rate, out.cols());
    for (Index r = 0; r < out.rows(); ++r) keep_top(out.row(r).data(), out.cols(), keep);
  } else {
    keep_top(out.data(), out.size(), kept_count(rate, out.size()));
  }
  return out;
}

Matrix max_norm_align(const Matrix& gradient) {
  const Vector norms = gradient.rowwise().norm();
  const double target = norms.size() > 0 ? norms.maxCoeff() : 0.0;
  Matrix out = gradient;
  for (Index r = 0; r < out.rows(); ++r) {
    if (norms[r] > 0.0) out.row(r) *= target / norms[r];
  }
  return out;
}

Defense::Defense(const DefenseConfig& config)
    : config_(config), rng_(make_rng(config.seed, "defense")) {
  config_.validate();
}

Matrix Defense::on_downstream(const Matrix& gradient) {
  switch (config_.kind) {
    case DefenseKind::dp: return dp_noise(gradient, config_.scale, rng_);
    case DefenseKind::gc: return gradient_compression(gradient, config_.rate, config_.gc_per_row);
    case DefenseKind::max_norm: return max_norm_align(gradient);
    default: return gradient;
  }
}

Matrix Defense::on_upstream(const Matrix& embeddings) {
  if (config_.kind == DefenseKind::iso) return iso_noise(embeddings, config_.scale, rng_);
  return embeddings;
}

}  // namespace bvg
