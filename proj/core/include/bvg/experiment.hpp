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

// Multi-seed experiment runner, sweeps, persistence and result export.
//
// Layout of a persisted run:
//   <out>/<config-hash>/config.json          resolved config snapshot
//   <out>/<config-hash>/result.json          aggregate RunResult
//   <out>/<config-hash>/<seed>/history.jsonl one record per epoch
//   <out>/<config-hash>/<seed>/seed.json     per-seed metrics
//   <out>/<config-hash>/<seed>/model.bvgk    trained checkpoint
//   <out>/<config-hash>/<seed>/trigger.bvgt  learned trigger (attacks only)

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bvg/config.hpp"
#include "bvg/metrics.hpp"

namespace bvg {

struct SeedResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double mta = 0.0;
  double asr = 0.0;
  double seconds = 0.0;
  NodeSet target_nodes;
  History history;
  std::optional<MultiHopTrigger> trigger;
};

struct RunResult {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<SeedResult> seeds;
  MeanStd mta;
  MeanStd asr;
  double seconds = 0.0;
  std::string sweep_axis;
  nlohmann::json sweep_value;
  std::filesystem::path directory;

  std::vector<double> mta_values() const;  // successful seeds only
  std::vector<double> asr_values() const;
  void aggregate();  // recompute mean/std from the successful seeds
};

nlohmann::json to_json(const RunResult& result);
RunResult run_result_from_json(const nlohmann::json& document);

struct RunOptions {
  std::filesystem::path data_dir = "data";
  std::optional<std::filesystem::path> out_root;
  int parallel = 1;
  std::function<void(const std::string&)> log;
};

/// Data directory: $BVG_DATA_DIR when set, otherwise `fallback`.
std::filesystem::path resolve_data_dir(const std::filesystem::path& fallback);

/// Process-wide cache of loaded datasets, keyed by (data_dir, name, scaling).
std::shared_ptr<const Graph> shared_dataset(const std::filesystem::path& data_dir,
                                            const std::string& name,
                                            FeatureScaling scaling = FeatureScaling::raw);

/// One training run (clean or attacked) for a single seed.
SeedResult run_seed(const Graph& graph, const ExperimentConfig& config, std::uint64_t seed,
                    const std::filesystem::path* seed_dir = nullptr);

/// Seeds config.seed .. config.seed + config.seeds - 1. Failed seeds are
/// recorded and skipped; if every seed fails, the first error is rethrown.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options);

struct SweepSpec {
  ExperimentConfig base;
  std::string axis;
  nlohmann::json values = nlohmann::json::array();
  int seeds = 5;

  void validate() const;
};

std::vector<RunResult> run_sweep(const SweepSpec& spec, const RunOptions& options);

/// Writes results.csv and results.jsonl into `directory`.
void export_results(std::span<const RunResult> results, const std::filesystem::path& directory);

/// Every `<root>/*/result.json`, ordered by directory name.
std::vector<RunResult> load_results(const std::filesystem::path& root);

const std::vector<std::string>& results_csv_columns();

}  // namespace bvg
