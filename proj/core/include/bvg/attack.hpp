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

// The adversary: a passive party that learns an additive multi-hop feature
// trigger from its own downstream gradients while training proceeds
// normally, then injects it into victims' feature rows at inference.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "bvg/vfl.hpp"

namespace bvg {

/// delta[m] is added to every feature row at exact hop distance m from a
/// center. Every entry stays inside [-epsilon, epsilon].
struct MultiHopTrigger {
  int hops = 0;
  std::vector<RowVector> deltas;  // hops + 1 vectors of width F_adv
  double epsilon = 0.0;
  double step_size = 0.0;
  std::int64_t step = 0;

  static MultiHopTrigger zeros(int hops, Index width, double epsilon, double step_size);
  Index width() const { return deltas.empty() ? 0 : deltas.front().size(); }
  double linf() const;
};

struct AttackConfig {
  int target_class = 0;
  int target_count = 4;   // |V_p|, used when target_nodes is empty
  NodeSet target_nodes;   // V_p; sampled from V_L when empty
  int hops = 2;
  double epsilon = 0.2;
  double step_size = 0.0;  // 0 selects epsilon / 10
  int trigger_epochs = 0;  // number of trigger updates; 0 = every epoch after warmup
  int warmup = 20;

  double alpha() const { return step_size > 0.0 ? step_size : epsilon / 10.0; }
  void validate() const;
  /// Checks V_p against the labeled set: every node in V_L and labeled tau.
  void validate_targets(const DataSplit& split, std::span<const int> labels) const;
};

/// rings[m] = nodes at exact shortest-path distance m from `center`.
struct HopRings {
  NodeId center = 0;
  std::vector<NodeSet> rings;
};

/// Breadth-first rings over one party's local edges.
HopRings hop_rings(const LocalGraph& graph, NodeId center, int hops);
HopRings hop_rings(NodeId num_nodes, const EdgeList& edges, NodeId center, int hops);

/// Override rows for the adversary's slice: every ring member's original row
/// plus the sum of all deltas that apply to it.
std::map<NodeId, RowVector> attach_trigger(const SparseMatrix& features,
                                           const MultiHopTrigger& trigger,
                                           std::span<const HopRings> centers);

/// delta[m] <- clamp(delta[m] - alpha * sign(g[m]), -eps, eps); sign(0) = 0.
void pgd_update(MultiHopTrigger& trigger, std::span<const RowVector> gradient);

/// dL/d(delta[m]) from the downstream message, counting only the rows of the
/// target nodes. `nodes` lists the batch rows of `downstream`.
std::vector<RowVector> trigger_gradient(const GnnParams& params, const LocalGraph& graph,
                                        const FeatureInput& x, const ModelCache& cache,
                                        std::span<const NodeId> nodes, const Matrix& downstream,
                                        std::span<const HopRings> centers);

/// isolated: each victim is evaluated with only its own trigger attached.
/// batch: all victims carry their triggers in one shared pass (overlapping
/// rings receive summed deltas).
enum class DeployMode { isolated, batch };

std::string_view to_string(DeployMode mode);
DeployMode parse_deploy_mode(std::string_view text);

std::vector<int> deploy_attack(Federation& federation, const MultiHopTrigger& trigger,
                               std::span<const NodeId> victims,
                               DeployMode mode = DeployMode::isolated);

struct AttackEvaluation {
  std::span<const int> labels;
  NodeSet test;
  NodeSet eligible;
  DeployMode deploy = DeployMode::isolated;
  int asr_every = 25;  // ASR is recorded every asr_every epochs and at the end
  int mta_every = 1;
};

struct AttackOutcome {
  MultiHopTrigger trigger;
  NodeSet target_nodes;
  History history;
};

/// Interleaved training: each epoch trains all parties on V_L with the
/// current trigger attached around V_p, then (after warmup) takes one PGD
/// step on the trigger using the adversary's own downstream gradient.
AttackOutcome bvg_train(Federation& federation, const DataSplit& split, const AttackConfig& config,
                        const AttackEvaluation& evaluation, int epochs);

// --- trigger artifact ----------------------------------------------------

struct TriggerArtifact {
  MultiHopTrigger trigger;
  int target_class = 0;
  int adversary_index = 1;
  std::vector<Index> slice_columns;
};

void save_trigger(const std::filesystem::path& path, const TriggerArtifact& artifact);
TriggerArtifact load_trigger(const std::filesystem::path& path);

}  // namespace bvg
