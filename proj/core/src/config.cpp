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
#include "bvg/config.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "bvg/container.hpp"
#include "bvg/error.hpp"

namespace bvg {
namespace {

using nlohmann::json;

void merge_strict(json& into, const json& from, const std::string& prefix) {
  if (!from.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (const auto& [key, value] : from.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!into.contains(key)) throw ConfigError(path, "unknown key");
    json& slot = into[key];
    if (slot.is_object()) {
      merge_strict(slot, value, path);
    } else {
      slot = value;
    }
  }
}

const json& field(const json& doc, const std::string& path) {
  const json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    cur = &cur->at(key);
    if (dot == std::string::npos) return *cur;
    start = dot + 1;
  }
}

int get_int(const json& doc, const std::string& path) {
  const json& v = field(doc, path);
  if (!v.is_number_integer()) throw ConfigError(path, fmt::format("expected an integer, got {}", v.dump()));
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(path, "integer out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t get_u64(const json& doc, const std::string& path) {
  const json& v = field(doc, path);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(path, fmt::format("expected a non-negative integer, got {}", v.dump()));
}

double get_double(const json& doc, const std::string& path) {
  const json& v = field(doc, path);
  if (!v.is_number()) throw ConfigError(path, fmt::format("expected a number, got {}", v.dump()));
  return v.get<double>();
}

bool get_bool(const json& doc, const std::string& path) {
  const json& v = field(doc, path);
  if (!v.is_boolean()) throw ConfigError(path, fmt::format("expected true or false, got {}", v.dump()));
  return v.get<bool>();
}

std::string get_string(const json& doc, const std::string& path) {
  const json& v = field(doc, path);
  if (!v.is_string()) throw ConfigError(path, fmt::format("expected a string, got {}", v.dump()));
  return v.get<std::string>();
}

template <typename F>
auto parse_enum(const json& doc, const std::string& path, F parse) {
  const std::string text = get_string(doc, path);
  try {
    return parse(text);
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
}

std::string axis_path(std::string_view axis) {
  if (axis == "hops") return "attack.hops";
  if (axis == "target_count") return "attack.target_count";
  if (axis == "epsilon") return "attack.epsilon";
  if (axis == "parties") return "parties";
  if (axis == "defense_scale") return "defense.scale";
  if (axis == "defense_rate") return "defense.rate";
  throw ConfigError("sweep.axis", fmt::format("unknown axis '{}'", axis));
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  return {
      {"dataset", c.dataset},
      {"features", to_string(c.features)},
      {"seed", c.seed},
      {"seeds", c.seeds},
      {"epochs", c.epochs},
      {"train_fraction", c.train_fraction},
      {"parties", c.parties},
      {"active_index", c.active_index},
      {"adversary_index", c.adversary_index},
      {"propagation", to_string(c.propagation)},
      {"model",
       {{"kind", to_string(c.model.kind)},
        {"hidden", c.model.hidden},
        {"embedding", c.model.embedding},
        {"gat_heads", c.model.gat_heads},
        {"gat_leaky_slope", c.model.gat_leaky_slope},
        {"top_hidden", c.model.top_hidden},
        {"lr", c.model.lr}}},
      {"attack",
       {{"enabled", c.attack.enabled},
        {"target_class", c.attack.target_class},
        {"target_count", c.attack.target_count},
        {"hops", c.attack.hops},
        {"epsilon", c.attack.epsilon},
        {"step_size", c.attack.step_size},
        {"warmup", c.attack.warmup},
        {"trigger_epochs", c.attack.trigger_epochs}}},
      {"defense",
       {{"kind", to_string(c.defense_kind)},
        {"scale", c.defense_scale},
        {"rate", c.defense_rate},
        {"gc_per_row", c.defense_gc_per_row}}},
      {"evaluation",
       {{"deploy", to_string(c.evaluation.deploy)},
        {"asr_every", c.evaluation.asr_every},
        {"mta_every", c.evaluation.mta_every},
        {"include_target_in_asr", c.evaluation.include_target_in_asr}}},
      {"sweep", {{"axis", c.sweep.axis}, {"values", c.sweep.values}}},
  };
}

ExperimentConfig config_from_json(const json& document) {
  json d = to_json(ExperimentConfig{});
  merge_strict(d, document, "");
  ExperimentConfig c;
  c.dataset = get_string(d, "dataset");
  c.features = parse_enum(d, "features", parse_feature_scaling);
  c.seed = get_u64(d, "seed");
  c.seeds = get_int(d, "seeds");
  c.epochs = get_int(d, "epochs");
  c.train_fraction = get_double(d, "train_fraction");
  c.parties = get_int(d, "parties");
  c.active_index = get_int(d, "active_index");
  c.adversary_index = get_int(d, "adversary_index");
  c.propagation = parse_enum(d, "propagation", parse_propagation);
  c.model.kind = parse_enum(d, "model.kind", parse_model_kind);
  c.model.hidden = get_int(d, "model.hidden");
  c.model.embedding = get_int(d, "model.embedding");
  c.model.gat_heads = get_int(d, "model.gat_heads");
  c.model.gat_leaky_slope = get_double(d, "model.gat_leaky_slope");
  c.model.top_hidden = get_int(d, "model.top_hidden");
  c.model.lr = get_double(d, "model.lr");
  c.attack.enabled = get_bool(d, "attack.enabled");
  c.attack.target_class = get_int(d, "attack.target_class");
  c.attack.target_count = get_int(d, "attack.target_count");
  c.attack.hops = get_int(d, "attack.hops");
  c.attack.epsilon = get_double(d, "attack.epsilon");
  c.attack.step_size = get_double(d, "attack.step_size");
  c.attack.warmup = get_int(d, "attack.warmup");
  c.attack.trigger_epochs = get_int(d, "attack.trigger_epochs");
  c.defense_kind = parse_enum(d, "defense.kind", parse_defense_kind);
  c.defense_scale = get_double(d, "defense.scale");
  c.defense_rate = get_double(d, "defense.rate");
  c.defense_gc_per_row = get_bool(d, "defense.gc_per_row");
  c.evaluation.deploy = parse_enum(d, "evaluation.deploy", parse_deploy_mode);
  c.evaluation.asr_every = get_int(d, "evaluation.asr_every");
  c.evaluation.mta_every = get_int(d, "evaluation.mta_every");
  c.evaluation.include_target_in_asr = get_bool(d, "evaluation.include_target_in_asr");
  c.sweep.axis = get_string(d, "sweep.axis");
  c.sweep.values = field(d, "sweep.values");
  if (!c.sweep.values.is_array()) throw ConfigError("sweep.values", "expected an array");
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset", "must not be empty");
  if (seeds < 1) throw ConfigError("seeds", "must be >= 1");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction", fmt::format("must lie in (0, 1), got {}", train_fraction));
  }
  if (parties < 1) throw ConfigError("parties", "must be >= 1");
  if (active_index < 0 || active_index >= parties) {
    throw ConfigError("active_index", fmt::format("must lie in [0, {})", parties));
  }
  if (adversary_index < -1 || adversary_index >= parties || adversary_index == active_index) {
    throw ConfigError("adversary_index",
                      fmt::format("must be -1 or a passive party index in [0, {})", parties));
  }
  if (model.hidden < 1) throw ConfigError("model.hidden", "must be >= 1");
  if (model.embedding < 1) throw ConfigError("model.embedding", "must be >= 1");
  if (model.gat_heads < 1 || model.hidden % model.gat_heads != 0) {
    throw ConfigError("model.gat_heads", "must be >= 1 and divide model.hidden");
  }
  if (model.top_hidden < 0) throw ConfigError("model.top_hidden", "must be >= 0");
  if (!(model.lr > 0.0)) throw ConfigError("model.lr", "must be > 0");
  if (attack.enabled) {
    if (adversary_index < 0) throw ConfigError("adversary_index", "an attack needs an adversary");
    attack_config(*this).validate();
  }
  if ((defense_kind == DefenseKind::dp || defense_kind == DefenseKind::iso) && !(defense_scale > 0.0)) {
    throw ConfigError("defense.scale", fmt::format("must be > 0 for {}", to_string(defense_kind)));
  }
  if (defense_kind == DefenseKind::gc && !(defense_rate > 0.0 && defense_rate <= 1.0)) {
    throw ConfigError("defense.rate", "must lie in (0, 1]");
  }
  if (evaluation.asr_every < 0) throw ConfigError("evaluation.asr_every", "must be >= 0");
  if (evaluation.mta_every < 0) throw ConfigError("evaluation.mta_every", "must be >= 0");
  if (!sweep.axis.empty()) {
    axis_path(sweep.axis);
    if (sweep.values.empty()) throw ConfigError("sweep.values", "must be nonempty when an axis is set");
  }
}

void apply_override(json& document, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError(std::string(assignment), "override must look like key.path=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* cur = &document;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string seg = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(seg)) throw ConfigError(key, "unknown key");
    cur = &(*cur)[seg];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (cur->is_object()) throw ConfigError(key, "cannot replace a whole section");
  *cur = std::move(value);
}

ExperimentConfig resolve_config(const json& document, const std::vector<std::string>& overrides) {
  json d = to_json(ExperimentConfig{});
  merge_strict(d, document, "");
  for (const std::string& o : overrides) apply_override(d, o);
  return config_from_json(d);
}

ExperimentConfig resolve_config(const std::filesystem::path& path,
                                const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw LoadError(fmt::format("cannot open config file {}", path.string()));
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return resolve_config(doc, overrides);
}

std::string config_hash(const ExperimentConfig& config) {
  json j = to_json(config);
  j.erase("seeds");
  j.erase("sweep");
  io::Fnv1a h;
  h.update(j.dump());
  return io::hex64(h.digest());
}

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes = {"hops",    "target_count",  "epsilon",
                                                "parties", "defense_scale", "defense_rate"};
  return axes;
}

ExperimentConfig with_axis_value(const ExperimentConfig& config, std::string_view axis,
                                 const json& value) {
  json d = to_json(config);
  apply_override(d, fmt::format("{}={}", axis_path(axis), value.dump()));
  return config_from_json(d);
}

FederationConfig federation_config(const ExperimentConfig& c, std::uint64_t run_seed) {
  FederationConfig f;
  f.model = c.model.kind;
  f.hidden = c.model.hidden;
  f.embedding = c.model.embedding;
  f.gat.heads = c.model.gat_heads;
  f.gat.leaky_slope = c.model.gat_leaky_slope;
  f.top_hidden = c.model.top_hidden;
  f.adam.lr = c.model.lr;
  f.init_seed = derive_seed(run_seed, "init");
  f.propagation = c.propagation;
  f.defense = defense_config(c, run_seed);
  return f;
}

AttackConfig attack_config(const ExperimentConfig& c) {
  AttackConfig a;
  a.target_class = c.attack.target_class;
  a.target_count = c.attack.target_count;
  a.hops = c.attack.hops;
  a.epsilon = c.attack.epsilon;
  a.step_size = c.attack.step_size;
  a.warmup = c.attack.warmup;
  a.trigger_epochs = c.attack.trigger_epochs;
  return a;
}

DefenseConfig defense_config(const ExperimentConfig& c, std::uint64_t run_seed) {
  DefenseConfig d;
  d.kind = c.defense_kind;
  d.scale = c.defense_scale;
  d.rate = c.defense_rate;
  d.gc_per_row = c.defense_gc_per_row;
  d.seed = derive_seed(run_seed, "defense");
  return d;
}

}  // namespace bvg
