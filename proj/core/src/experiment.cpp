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
#include "bvg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "bvg/datasets.hpp"
#include "bvg/error.hpp"

namespace bvg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

VerticalPartition single_party_partition(const Graph& graph) {
  VerticalPartition p;
  p.num_parties = 1;
  p.active_index = 0;
  p.adversary_index = -1;
  FeatureSlice all;
  for (Index c = 0; c < graph.num_features(); ++c) all.columns.push_back(c);
  p.feature_slices.push_back(std::move(all));
  p.edge_subsets.push_back(graph.edges);
  return p;
}

json record_json(const EpochRecord& r) {
  json j = {{"epoch", r.epoch}, {"loss", r.loss}};
  j["mta"] = r.mta ? json(*r.mta) : json(nullptr);
  j["asr"] = r.asr ? json(*r.asr) : json(nullptr);
  return j;
}

json seed_json(const SeedResult& s) {
  return {{"seed", s.seed},          {"failed", s.failed},   {"error", s.error},
          {"mta", s.mta},            {"asr", s.asr},         {"seconds", s.seconds},
          {"target_nodes", s.target_nodes}};
}

SeedResult seed_from_json(const json& j) {
  SeedResult s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.failed = j.at("failed").get<bool>();
  s.error = j.at("error").get<std::string>();
  s.mta = j.at("mta").get<double>();
  s.asr = j.at("asr").get<double>();
  s.seconds = j.at("seconds").get<double>();
  s.target_nodes = j.at("target_nodes").get<NodeSet>();
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(fmt::format("cannot write {}", path.string()));
  out << text;
}

void persist_seed(const fs::path& dir, const SeedResult& r, const Federation* federation,
                  const ExperimentConfig& config) {
  fs::create_directories(dir);
  std::string lines;
  for (const EpochRecord& rec : r.history) lines += record_json(rec).dump() + "\n";
  write_text(dir / "history.jsonl", lines);
  write_text(dir / "seed.json", seed_json(r).dump(2) + "\n");
  if (federation != nullptr) {
    save_checkpoint(dir / "model.bvgk", federation->bottom_params(), federation->top_params());
    if (r.trigger) {
      TriggerArtifact a;
      a.trigger = *r.trigger;
      a.target_class = config.attack.target_class;
      a.adversary_index = federation->adversary_index();
      a.slice_columns = federation->party(a.adversary_index).slice.columns;
      save_trigger(dir / "trigger.bvgt", a);
    }
  }
}

std::string csv_number(double v) { return fmt::format("{:.4f}", v); }

}  // namespace

std::vector<double> RunResult::mta_values() const {
  std::vector<double> v;
  for (const SeedResult& s : seeds) {
    if (!s.failed) v.push_back(s.mta);
  }
  return v;
}

std::vector<double> RunResult::asr_values() const {
  std::vector<double> v;
  for (const SeedResult& s : seeds) {
    if (!s.failed) v.push_back(s.asr);
  }
  return v;
}

void RunResult::aggregate() {
  const auto m = mta_values();
  const auto a = asr_values();
  mta = mean_std(m);
  asr = mean_std(a);
}

json to_json(const RunResult& r) {
  json seeds = json::array();
  for (const SeedResult& s : r.seeds) seeds.push_back(seed_json(s));
  return {{"config", to_json(r.config)},
          {"config_hash", r.config_hash},
          {"seeds", std::move(seeds)},
          {"mta", {{"mean", r.mta.mean}, {"std", r.mta.std}}},
          {"asr", {{"mean", r.asr.mean}, {"std", r.asr.std}}},
          {"seconds", r.seconds},
          {"sweep", {{"axis", r.sweep_axis}, {"value", r.sweep_value}}}};
}

RunResult run_result_from_json(const json& doc) {
  RunResult r;
  try {
    r.config = config_from_json(doc.at("config"));
    r.config_hash = doc.at("config_hash").get<std::string>();
    for (const auto& s : doc.at("seeds")) r.seeds.push_back(seed_from_json(s));
    r.mta = {doc.at("mta").at("mean").get<double>(), doc.at("mta").at("std").get<double>()};
    r.asr = {doc.at("asr").at("mean").get<double>(), doc.at("asr").at("std").get<double>()};
    r.seconds = doc.at("seconds").get<double>();
    r.sweep_axis = doc.at("sweep").at("axis").get<std::string>();
    r.sweep_value = doc.at("sweep").at("value");
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("malformed run result: {}", e.what()));
  }
  return r;
}

fs::path resolve_data_dir(const fs::path& fallback) {
  if (const char* env = std::getenv("BVG_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return fallback;
}

std::shared_ptr<const Graph> shared_dataset(const fs::path& data_dir, const std::string& name,
                                            FeatureScaling scaling) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const Graph>> cache;
  const std::string key = fmt::format("{}:{}", (data_dir / name).string(), to_string(scaling));
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::make_shared<const Graph>(load_dataset(data_dir, name, scaling))).first;
  }
  return it->second;
}

SeedResult run_seed(const Graph& graph, const ExperimentConfig& config, std::uint64_t seed,
                    const fs::path* seed_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  SeedResult r;
  r.seed = seed;
  const int tau = config.attack.target_class;
  if (tau >= graph.num_classes) {
    throw ConfigError("attack.target_class",
                      fmt::format("{} has only {} classes", graph.name, graph.num_classes));
  }
  const std::uint64_t data_seed = derive_seed(seed, "data");
  const DataSplit split = split_train_test(graph, config.train_fraction, data_seed);
  const VerticalPartition partition =
      config.parties == 1 ? single_party_partition(graph)
                          : partition_vertical(graph, config.parties, config.adversary_index,
                                               config.active_index, data_seed);
  Federation federation(graph, split, partition, federation_config(config, seed));
  const NodeSet eligible =
      asr_eligible(split.test, graph.labels, tau, config.evaluation.include_target_in_asr);

  if (config.attack.enabled) {
    AttackConfig ac = attack_config(config);
    ac.target_nodes = sample_target_nodes(graph, split, tau, ac.target_count,
                                          derive_seed(seed, "attack"));
    AttackEvaluation ev{graph.labels, split.test, eligible, config.evaluation.deploy,
                        config.evaluation.asr_every, config.evaluation.mta_every};
    AttackOutcome out = bvg_train(federation, split, ac, ev, config.epochs);
    r.target_nodes = out.target_nodes;
    r.history = std::move(out.history);
    r.trigger = std::move(out.trigger);
    r.mta = r.history.back().mta.value_or(0.0);
    r.asr = r.history.back().asr.value_or(0.0);
  } else {
    GroundTruth truth{graph.labels, split.test};
    r.history = train_clean(federation, split, truth, config.epochs, config.evaluation.mta_every);
    r.mta = r.history.back().mta.value_or(0.0);
    r.asr = eligible.empty() ? 0.0 : compute_asr(federation.predict(eligible), tau, eligible);
    r.history.back().asr = r.asr;
  }
  r.seconds = seconds_since(t0);
  if (seed_dir != nullptr) persist_seed(*seed_dir, r, &federation, config);
  return r;
}

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  result.config = config;
  result.config_hash = config_hash(config);
  result.sweep_axis = config.sweep.axis;
  if (options.out_root) {
    result.directory = *options.out_root / result.config_hash;
    fs::create_directories(result.directory);
    write_text(result.directory / "config.json", to_json(config).dump(2) + "\n");
  }
  const auto graph = shared_dataset(options.data_dir, config.dataset, config.features);

  const auto n = static_cast<std::size_t>(config.seeds);
  result.seeds.resize(n);
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const std::uint64_t seed = config.seed + i;
      SeedResult& slot = result.seeds[i];
      const fs::path dir = result.directory / std::to_string(seed);
      try {
        slot = run_seed(*graph, config, seed, options.out_root ? &dir : nullptr);
      } catch (const std::exception& e) {
        slot = SeedResult{};
        slot.seed = seed;
        slot.failed = true;
        slot.error = e.what();
        if (options.out_root) persist_seed(dir, slot, nullptr, config);
      }
      if (options.log) {
        std::lock_guard<std::mutex> lock(log_mu);
        options.log(slot.failed ? fmt::format("seed={} failed: {}", seed, slot.error)
                                : fmt::format("seed={} mta={:.2f} asr={:.2f} seconds={:.1f}", seed,
                                              slot.mta, slot.asr, slot.seconds));
      }
    }
  };
  const int threads = std::clamp<int>(options.parallel, 1, static_cast<int>(n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  const auto ok = std::count_if(result.seeds.begin(), result.seeds.end(),
                                [](const SeedResult& s) { return !s.failed; });
  if (ok == 0) throw Error(fmt::format("every seed failed; first error: {}", result.seeds.front().error));
  result.aggregate();
  result.seconds = seconds_since(t0);
  if (options.out_root) write_text(result.directory / "result.json", to_json(result).dump(2) + "\n");
  return result;
}

void SweepSpec::validate() const {
  const auto& axes = sweep_axes();
  if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
    throw ConfigError("sweep.axis", fmt::format("unknown axis '{}'", axis));
  }
  if (!values.is_array() || values.empty()) throw ConfigError("sweep.values", "must be a nonempty array");
  if (seeds < 1) throw ConfigError("seeds", "must be >= 1");
}

std::vector<RunResult> run_sweep(const SweepSpec& spec, const RunOptions& options) {
  spec.validate();
  std::vector<RunResult> out;
  for (const json& value : spec.values) {
    ExperimentConfig cfg = with_axis_value(spec.base, spec.axis, value);
    cfg.seeds = spec.seeds;
    cfg.sweep.axis = spec.axis;
    cfg.sweep.values = json::array({value});
    if (options.log) options.log(fmt::format("sweep {}={}", spec.axis, value.dump()));
    RunResult r = run_experiment(cfg, options);
    r.sweep_axis = spec.axis;
    r.sweep_value = value;
    if (!r.directory.empty()) write_text(r.directory / "result.json", to_json(r).dump(2) + "\n");
    out.push_back(std::move(r));
  }
  return out;
}

const std::vector<std::string>& results_csv_columns() {
  static const std::vector<std::string> cols = {
      "config_hash", "dataset",      "model",        "parties",       "attack",
      "target_class", "target_count", "hops",        "epsilon",       "defense",
      "defense_scale", "defense_rate", "sweep_axis", "sweep_value",   "seeds_ok",
      "mta_mean",    "mta_std",      "asr_mean",     "asr_std"};
  return cols;
}

void export_results(std::span<const RunResult> results, const fs::path& directory) {
  fs::create_directories(directory);
  std::string csv;
  const auto& cols = results_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) csv += (i ? "," : "") + cols[i];
  csv += "\n";
  std::string jsonl;
  for (const RunResult& r : results) {
    const ExperimentConfig& c = r.config;
    const std::vector<std::string> row = {
        r.config_hash,
        c.dataset,
        std::string(to_string(c.model.kind)),
        std::to_string(c.parties),
        c.attack.enabled ? "bvg" : "none",
        std::to_string(c.attack.target_class),
        std::to_string(c.attack.target_count),
        std::to_string(c.attack.hops),
        fmt::format("{}", c.attack.epsilon),
        std::string(to_string(c.defense_kind)),
        fmt::format("{}", c.defense_scale),
        fmt::format("{}", c.defense_rate),
        r.sweep_axis,
        r.sweep_value.is_null() ? "" : r.sweep_value.dump(),
        std::to_string(r.mta_values().size()),
        csv_number(r.mta.mean),
        csv_number(r.mta.std),
        csv_number(r.asr.mean),
        csv_number(r.asr.std)};
    for (std::size_t i = 0; i < row.size(); ++i) csv += (i ? "," : "") + row[i];
    csv += "\n";
    jsonl += to_json(r).dump() + "\n";
  }
  write_text(directory / "results.csv", csv);
  write_text(directory / "results.jsonl", jsonl);
}

std::vector<RunResult> load_results(const fs::path& root) {
  std::vector<fs::path> dirs;
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && fs::exists(entry.path() / "result.json")) dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<RunResult> out;
  for (const fs::path& d : dirs) {
    std::ifstream in(d / "result.json");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("{}: {}", (d / "result.json").string(), e.what()));
    }
    RunResult r = run_result_from_json(doc);
    r.directory = d;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace bvg
