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
#include "bvg/attack.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <fmt/format.h>

#include "bvg/container.hpp"
#include "bvg/error.hpp"
#include "bvg/metrics.hpp"

namespace bvg {
namespace {

RowVector dense_row(const SparseMatrix& m, NodeId r) {
  RowVector out = RowVector::Zero(m.cols());
  for (SparseMatrix::InnerIterator it(m, r); it; ++it) out[it.col()] = it.value();
  return out;
}

HopRings bfs_rings(NodeId num_nodes, NodeId center, int hops,
                   const std::function<void(NodeId, const std::function<void(NodeId)>&)>& each_nbr) {
  if (center < 0 || center >= num_nodes) {
    throw ContractError(fmt::format("ring center {} out of range", center));
  }
  if (hops < 0) throw ValidationError("hops must be >= 0");
  HopRings out;
  out.center = center;
  out.rings.assign(static_cast<std::size_t>(hops) + 1, {});
  out.rings[0] = {center};
  std::vector<int> dist(static_cast<std::size_t>(num_nodes), -1);
  dist[center] = 0;
  std::deque<NodeId> queue{center};
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    if (dist[u] == hops) continue;
    each_nbr(u, [&](NodeId w) {
      if (dist[w] != -1) return;
      dist[w] = dist[u] + 1;
      out.rings[static_cast<std::size_t>(dist[w])].push_back(w);
      queue.push_back(w);
    });
  }
  for (auto& ring : out.rings) std::sort(ring.begin(), ring.end());
  return out;
}

void check_rings(const MultiHopTrigger& trigger, std::span<const HopRings> centers) {
  for (const HopRings& r : centers) {
    if (static_cast<int>(r.rings.size()) != trigger.hops + 1) {
      throw ContractError(fmt::format("rings for center {} have {} levels, trigger has {} hops",
                                      r.center, r.rings.size(), trigger.hops));
    }
  }
}

}  // namespace

MultiHopTrigger MultiHopTrigger::zeros(int hops, Index width, double epsilon, double step_size) {
  if (hops < 0) throw ValidationError("hops must be >= 0");
  MultiHopTrigger t;
  t.hops = hops;
  t.deltas.assign(static_cast<std::size_t>(hops) + 1, RowVector::Zero(width));
  t.epsilon = epsilon;
  t.step_size = step_size;
  return t;
}

double MultiHopTrigger::linf() const {
  double m = 0.0;
  for (const RowVector& d : deltas) {
    if (d.size() > 0) m = std::max(m, d.cwiseAbs().maxCoeff());
  }
  return m;
}

void AttackConfig::validate() const {
  if (target_class < 0) throw ConfigError("attack.target_class", "must be >= 0");
  if (hops < 0) throw ConfigError("attack.hops", "must be >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("attack.epsilon", fmt::format("must be > 0, got {}", epsilon));
  if (step_size < 0.0) throw ConfigError("attack.step_size", "must be >= 0");
  if (warmup < 0) throw ConfigError("attack.warmup", "must be >= 0");
  if (trigger_epochs < 0) throw ConfigError("attack.trigger_epochs", "must be >= 0");
  if (target_nodes.empty() && target_count < 1) {
    throw ConfigError("attack.target_count", "must be >= 1");
  }
}

void AttackConfig::validate_targets(const DataSplit& split, std::span<const int> labels) const {
  if (target_nodes.empty()) throw ValidationError("V_p must contain at least one node");
  for (NodeId v : target_nodes) {
    if (!std::binary_search(split.train_labeled.begin(), split.train_labeled.end(), v)) {
      throw ValidationError(fmt::format("target node {} is not in the labeled training set", v));
    }
    if (labels[static_cast<std::size_t>(v)] != target_class) {
      throw ValidationError(fmt::format("target node {} is not labeled {}", v, target_class));
    }
  }
}

HopRings hop_rings(const LocalGraph& graph, NodeId center, int hops) {
  return bfs_rings(graph.num_nodes, center, hops, [&graph](NodeId u, const auto& visit) {
    for (NodeId w : graph.neighbourhood(u)) {
      if (w != u) visit(w);
    }
  });
}

HopRings hop_rings(NodeId num_nodes, const EdgeList& edges, NodeId center, int hops) {
  const auto adj = adjacency_lists(num_nodes, edges);
  return bfs_rings(num_nodes, center, hops, [&adj](NodeId u, const auto& visit) {
    for (NodeId w : adj[static_cast<std::size_t>(u)]) visit(w);
  });
}

std::map<NodeId, RowVector> attach_trigger(const SparseMatrix& features,
                                           const MultiHopTrigger& trigger,
                                           std::span<const HopRings> centers) {
  if (trigger.width() != features.cols()) {
    throw ContractError(fmt::format("trigger width {} does not match feature slice width {}",
                                    trigger.width(), features.cols()));
  }
  check_rings(trigger, centers);
  std::map<NodeId, RowVector> rows;
  for (const HopRings& r : centers) {
    for (int m = 0; m <= trigger.hops; ++m) {
      for (NodeId u : r.rings[static_cast<std::size_t>(m)]) {
        auto [it, inserted] = rows.try_emplace(u);
        if (inserted) it->second = dense_row(features, u);
        it->second += trigger.deltas[static_cast<std::size_t>(m)];
      }
    }
  }
  return rows;
}

void pgd_update(MultiHopTrigger& trigger, std::span<const RowVector> gradient) {
  if (static_cast<int>(gradient.size()) != trigger.hops + 1) {
    throw ContractError(fmt::format("{} gradient vectors for a {}-hop trigger", gradient.size(),
                                    trigger.hops));
  }
  for (std::size_t m = 0; m < gradient.size(); ++m) {
    if (gradient[m].size() != trigger.width()) {
      throw ContractError("trigger gradient width mismatch");
    }
    if (!gradient[m].allFinite()) {
      throw DivergenceError(fmt::format("non-finite trigger gradient at hop {}", m));
    }
  }
  const double eps = trigger.epsilon;
  for (std::size_t m = 0; m < gradient.size(); ++m) {
    RowVector& d = trigger.deltas[m];
    for (Index j = 0; j < d.size(); ++j) {
      const double g = gradient[m][j];
      const double s = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
      d[j] = std::clamp(d[j] - trigger.step_size * s, -eps, eps);
    }
  }
  ++trigger.step;
}

std::vector<RowVector> trigger_gradient(const GnnParams& params, const LocalGraph& graph,
                                        const FeatureInput& x, const ModelCache& cache,
                                        std::span<const NodeId> nodes, const Matrix& downstream,
                                        std::span<const HopRings> centers) {
  if (downstream.rows() != static_cast<Index>(nodes.size())) {
    throw ContractError("downstream rows do not match the batch");
  }
  if (centers.empty()) throw ContractError("trigger_gradient needs at least one center");
  const int hops = static_cast<int>(centers.front().rings.size()) - 1;
  NodeSet targets;
  for (const HopRings& r : centers) {
    if (static_cast<int>(r.rings.size()) != hops + 1) throw ContractError("ring depth mismatch");
    targets.push_back(r.center);
  }
  std::sort(targets.begin(), targets.end());

  Matrix upstream = Matrix::Zero(graph.num_nodes, downstream.cols());
  std::size_t seen = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (std::binary_search(targets.begin(), targets.end(), nodes[i])) {
      upstream.row(nodes[i]) += downstream.row(static_cast<Index>(i));
      ++seen;
    }
  }
  if (seen < targets.size()) throw ContractError("a target node is missing from the batch");

  NodeSet rows;
  for (const HopRings& r : centers) {
    for (const NodeSet& ring : r.rings) rows.insert(rows.end(), ring.begin(), ring.end());
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

  const ModelGradients grads = model_backward(params, graph, x, cache, upstream, rows, false);
  std::vector<RowVector> g(static_cast<std::size_t>(hops) + 1, RowVector::Zero(x.cols()));
  for (const HopRings& r : centers) {
    for (int m = 0; m <= hops; ++m) {
      for (NodeId u : r.rings[static_cast<std::size_t>(m)]) {
        const auto pos = std::lower_bound(rows.begin(), rows.end(), u) - rows.begin();
        g[static_cast<std::size_t>(m)] += grads.input_rows.row(pos);
      }
    }
  }
  return g;
}

std::string_view to_string(DeployMode mode) {
  return mode == DeployMode::batch ? "batch" : "isolated";
}

DeployMode parse_deploy_mode(std::string_view text) {
  if (text == "isolated") return DeployMode::isolated;
  if (text == "batch") return DeployMode::batch;
  throw ValidationError(fmt::format("unknown deploy mode '{}'", text));
}

std::vector<int> deploy_attack(Federation& federation, const MultiHopTrigger& trigger,
                               std::span<const NodeId> victims, DeployMode mode) {
  if (victims.empty()) return {};
  const int adv = federation.adversary_index();
  if (adv < 0) throw ContractError("federation has no adversary");
  const PartyState& ap = federation.party(adv);
  if (trigger.width() != ap.slice.width()) throw ContractError("trigger width mismatch");

  if (mode == DeployMode::batch) {
    std::vector<HopRings> centers;
    for (NodeId v : victims) centers.push_back(hop_rings(ap.graph, v, trigger.hops));
    FeatureOverride ov{adv, attach_trigger(ap.features, trigger, centers)};
    return federation.predict(victims, &ov);
  }

  const std::vector<ModelCache> caches = federation.inference_caches();
  const Index d = federation.embedding_width();
  const auto n = static_cast<Index>(victims.size());
  std::vector<RowVector> delta_xw;
  for (const RowVector& delta : trigger.deltas) delta_xw.push_back(delta * ap.params.input_weight());

  Matrix adv_rows(n, d);
  for (Index i = 0; i < n; ++i) {
    const NodeId v = victims[static_cast<std::size_t>(i)];
    const HopRings r = hop_rings(ap.graph, v, trigger.hops);
    std::map<NodeId, RowVector> patch;
    for (int m = 0; m <= trigger.hops; ++m) {
      for (NodeId u : r.rings[static_cast<std::size_t>(m)]) {
        patch[u] = delta_xw[static_cast<std::size_t>(m)];
      }
    }
    const NodeId one[] = {v};
    adv_rows.row(i) = embed_rows_patched(ap.params, ap.graph, caches[static_cast<std::size_t>(adv)],
                                         patch, one);
  }

  Matrix concatenated(n, d * federation.num_parties());
  for (int k = 0; k < federation.num_parties(); ++k) {
    Matrix rows(n, d);
    if (k == adv) {
      rows = adv_rows;
    } else {
      for (Index i = 0; i < n; ++i) {
        rows.row(i) = caches[static_cast<std::size_t>(k)].output.row(victims[static_cast<std::size_t>(i)]);
      }
    }
    concatenated.middleCols(k * d, d) = federation.receive_upstream(k, rows);
  }
  return argmax_rows(federation.top_logits(concatenated));
}

AttackOutcome bvg_train(Federation& federation, const DataSplit& split, const AttackConfig& config,
                        const AttackEvaluation& evaluation, int epochs) {
  config.validate();
  config.validate_targets(split, evaluation.labels);
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  const int adv = federation.adversary_index();
  if (adv < 0) throw ContractError("federation has no adversary");
  const PartyState& ap = federation.party(adv);

  AttackOutcome out;
  out.target_nodes = config.target_nodes;
  out.trigger = MultiHopTrigger::zeros(config.hops, ap.slice.width(), config.epsilon, config.alpha());

  std::vector<HopRings> centers;
  for (NodeId p : config.target_nodes) centers.push_back(hop_rings(ap.graph, p, config.hops));

  const int max_updates = config.trigger_epochs > 0 ? config.trigger_epochs : epochs;
  int updates = 0;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const SparseMatrix& base = federation.features_for(adv, RoundMode::training);
    FeatureOverride ov{adv, attach_trigger(base, out.trigger, centers)};
    ForwardResult fwd = federation.forward_round(split.train_labeled, &ov, RoundMode::training);
    const LossResult loss = federation.active_loss(fwd);
    if (!std::isfinite(loss.loss)) {
      throw DivergenceError(fmt::format("non-finite training loss at epoch {}", epoch));
    }
    const bool update = epoch > config.warmup && updates < max_updates;
    federation.backward_round(fwd, loss.dlogits, [&](std::span<const NodeId> nodes, const Matrix& own) {
      if (!update) return;
      const FeatureInput x(base, fwd.override_rows->rows);
      const auto g = trigger_gradient(ap.params, ap.graph, x, fwd.caches[static_cast<std::size_t>(adv)],
                                      nodes, own, centers);
      pgd_update(out.trigger, g);
      ++updates;
    });
    if (out.trigger.linf() > config.epsilon) {
      throw ContractError(fmt::format("trigger left the epsilon ball at epoch {}", epoch));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss.loss;
    if (epoch == epochs || (evaluation.mta_every > 0 && epoch % evaluation.mta_every == 0)) {
      rec.mta = compute_mta(federation.predict(evaluation.test), evaluation.labels, evaluation.test);
    }
    const bool probe = epoch == epochs || (evaluation.asr_every > 0 && epoch % evaluation.asr_every == 0);
    if (probe && !evaluation.eligible.empty()) {
      rec.asr = compute_asr(deploy_attack(federation, out.trigger, evaluation.eligible, evaluation.deploy),
                            config.target_class, evaluation.eligible);
    }
    out.history.push_back(rec);
  }
  return out;
}

void save_trigger(const std::filesystem::path& path, const TriggerArtifact& artifact) {
  io::json deltas = io::json::array();
  for (const RowVector& d : artifact.trigger.deltas) {
    deltas.push_back(io::pack_doubles({d.data(), static_cast<std::size_t>(d.size())}));
  }
  std::vector<std::int64_t> cols(artifact.slice_columns.begin(), artifact.slice_columns.end());
  io::write_container(path, {{"kind", "trigger"},
                             {"version", 1},
                             {"target_class", artifact.target_class},
                             {"hops", artifact.trigger.hops},
                             {"epsilon", artifact.trigger.epsilon},
                             {"step_size", artifact.trigger.step_size},
                             {"step", artifact.trigger.step},
                             {"deltas", std::move(deltas)},
                             {"adversary_index", artifact.adversary_index},
                             {"slice_columns", io::pack_ints(cols)}});
}

TriggerArtifact load_trigger(const std::filesystem::path& path) {
  const io::json doc = io::read_container(path, "trigger");
  TriggerArtifact a;
  a.target_class = doc.at("target_class").get<int>();
  a.adversary_index = doc.at("adversary_index").get<int>();
  for (std::int64_t c : io::unpack_ints(doc.at("slice_columns"))) a.slice_columns.push_back(c);
  a.trigger.hops = doc.at("hops").get<int>();
  a.trigger.epsilon = doc.at("epsilon").get<double>();
  a.trigger.step_size = doc.at("step_size").get<double>();
  a.trigger.step = doc.at("step").get<std::int64_t>();
  for (const auto& blob : doc.at("deltas")) {
    const std::vector<double> v = io::unpack_doubles(blob);
    a.trigger.deltas.push_back(Eigen::Map<const RowVector>(v.data(), static_cast<Index>(v.size())));
  }
  if (static_cast<int>(a.trigger.deltas.size()) != a.trigger.hops + 1) {
    throw IntegrityError(fmt::format("{}: trigger has {} deltas for {} hops", path.string(),
                                     a.trigger.deltas.size(), a.trigger.hops));
  }
  for (const RowVector& d : a.trigger.deltas) {
    if (d.size() != static_cast<Index>(a.slice_columns.size())) {
      throw IntegrityError(fmt::format("{}: delta width does not match the slice manifest", path.string()));
    }
  }
  if (a.trigger.linf() > a.trigger.epsilon) {
    throw IntegrityError(fmt::format("{}: trigger exceeds its epsilon ball", path.string()));
  }
  return a;
}

}  // namespace bvg
