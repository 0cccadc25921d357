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

// Experiment configuration: one JSON document covering data, federation,
// attack, defense and evaluation settings. Every key has a default; files and
// dotted-path overrides may only set keys that exist in the defaults.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bvg/attack.hpp"
#include "bvg/defenses.hpp"
#include "bvg/vfl.hpp"

namespace bvg {

struct ModelSection {
  ModelKind kind = ModelKind::gcn;
  Index hidden = 32;
  Index embedding = 16;
  int gat_heads = 1;
  double gat_leaky_slope = 0.2;
  Index top_hidden = 0;
  double lr = 0.01;
};

struct AttackSection {
  bool enabled = false;
  int target_class = 0;
  int target_count = 4;
  int hops = 2;
  double epsilon = 0.2;
  double step_size = 0.0;
  int warmup = 20;
  int trigger_epochs = 0;
};

struct EvaluationSection {
  DeployMode deploy = DeployMode::isolated;
  int asr_every = 25;
  int mta_every = 1;
  bool include_target_in_asr = false;
};

struct SweepSection {
  std::string axis;  // empty, or one of sweep_axes()
  nlohmann::json values = nlohmann::json::array();
};

struct ExperimentConfig {
  std::string dataset = "cora";
  FeatureScaling features = FeatureScaling::raw;
  std::uint64_t seed = 0;  // per-run seeds are seed, seed+1, ...
  int seeds = 5;
  int epochs = 300;
  double train_fraction = 0.1;
  int parties = 2;
  int active_index = 0;
  int adversary_index = 1;
  Propagation propagation = Propagation::transductive;
  ModelSection model;
  AttackSection attack;
  DefenseKind defense_kind = DefenseKind::none;
  double defense_scale = 0.0;
  double defense_rate = 1.0;
  bool defense_gc_per_row = false;
  EvaluationSection evaluation;
  SweepSection sweep;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);

/// Strict conversion: unknown keys and type mismatches raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& document);

/// Applies `key.path=value`; the value is parsed as JSON, falling back to a
/// plain string.
void apply_override(nlohmann::json& document, std::string_view assignment);

/// File + overrides -> validated config.
ExperimentConfig resolve_config(const std::filesystem::path& path,
                                const std::vector<std::string>& overrides);
ExperimentConfig resolve_config(const nlohmann::json& document,
                                const std::vector<std::string>& overrides);

/// Stable hash of everything that affects per-seed results (the seed count
/// and the sweep block are excluded).
std::string config_hash(const ExperimentConfig& config);

const std::vector<std::string>& sweep_axes();

/// Copy of `config` with `axis` set to `value`.
ExperimentConfig with_axis_value(const ExperimentConfig& config, std::string_view axis,
                                 const nlohmann::json& value);

FederationConfig federation_config(const ExperimentConfig& config, std::uint64_t run_seed);
AttackConfig attack_config(const ExperimentConfig& config);
DefenseConfig defense_config(const ExperimentConfig& config, std::uint64_t run_seed);

}  // namespace bvg
