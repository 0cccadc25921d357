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

// Vertical split-learning over a shared node set. Every party runs its bottom
// GNN on its own feature slice and edge subset; the active party concatenates
// the transmitted embeddings, applies the top model and the loss, and sends
// dL/dH back. Only those two message kinds ever cross a party boundary, and
// every crossing is recorded in the message log.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "bvg/datasets.hpp"
#include "bvg/defenses.hpp"
#include "bvg/gnn.hpp"

namespace bvg {

enum class PartyRole { active, passive };

/// transductive: all node features propagate during training.
/// strict: test-node feature rows are zeroed during training rounds.
enum class Propagation { transductive, strict };

std::string_view to_string(Propagation p);
Propagation parse_propagation(std::string_view text);

struct FederationConfig {
  ModelKind model = ModelKind::gcn;
  Index hidden = 32;
  Index embedding = 16;
  GatOptions gat;
  Index top_hidden = 0;  // 0 = linear top model
  AdamOptions adam;
  std::uint64_t init_seed = 0;
  Propagation propagation = Propagation::transductive;
  DefenseConfig defense;

  void validate() const;
};

/// Labels are visible to the active party only, and only over V_L.
struct LabelView {
  NodeSet nodes;
  std::vector<int> labels;

  int label_of(NodeId v) const;  // ProtocolError outside V_L
};

struct ActiveState {
  TopParams top;
  AdamState top_opt;
  LabelView labels;
};

struct PartyState {
  int index = 0;
  PartyRole role = PartyRole::passive;
  FeatureSlice slice;
  SparseMatrix features;        // N x F_k
  SparseMatrix train_features;  // strict mode only: test rows zeroed
  LocalGraph graph;
  GnnParams params;
  AdamState opt;
  std::optional<ActiveState> active;
};

enum class MessageKind { embedding, embedding_gradient };

std::string_view to_string(MessageKind kind);

struct MessageRecord {
  std::int64_t round = 0;
  int from = 0;
  int to = 0;
  MessageKind kind = MessageKind::embedding;
  Index rows = 0;
  Index cols = 0;
};

struct RoundMessages {
  std::vector<NodeId> nodes;
  std::vector<Matrix> upstream;    // per party, |nodes| x d, as received
  std::vector<Matrix> downstream;  // per party, |nodes| x d, as delivered
};

/// Replacement feature rows for one party. Only the adversary may inject.
struct FeatureOverride {
  int party = -1;
  std::map<NodeId, RowVector> rows;
};

enum class RoundMode { training, inference };

struct ForwardResult {
  std::vector<NodeId> nodes;
  RoundMode mode = RoundMode::training;
  std::optional<FeatureOverride> override_rows;
  std::vector<ModelCache> caches;
  TopCache top;
  Matrix logits;
  RoundMessages messages;
  std::uint64_t version = 0;
};

/// The adversary's view of one delivery: the batch node ids and its own
/// downstream gradient, observed before any parameter update.
using DownstreamHook = std::function<void(std::span<const NodeId> nodes, const Matrix& own)>;

class Federation {
 public:
  Federation(const Graph& graph, const DataSplit& split, const VerticalPartition& partition,
             const FederationConfig& config);

  int num_parties() const { return static_cast<int>(parties_.size()); }
  int active_index() const { return active_; }
  int adversary_index() const { return adversary_; }  // -1 when there is none
  Index embedding_width() const { return config_.embedding; }
  NodeId num_nodes() const { return num_nodes_; }
  Index num_classes() const { return num_classes_; }
  const FederationConfig& config() const { return config_; }

  const PartyState& party(int k) const;
  const std::vector<MessageRecord>& message_log() const { return log_; }
  void clear_message_log() { log_.clear(); }
  std::int64_t rounds() const { return round_; }

  /// Feature matrix a party uses in a round of the given mode.
  const SparseMatrix& features_for(int k, RoundMode mode) const;

  ForwardResult forward_round(std::span<const NodeId> nodes,
                              const FeatureOverride* override_rows = nullptr,
                              RoundMode mode = RoundMode::training);

  /// Active party's loss over the batch (the batch must lie inside V_L).
  LossResult active_loss(const ForwardResult& forward) const;

  RoundMessages backward_round(const ForwardResult& forward, const Matrix& dlogits,
                               const DownstreamHook& hook = {});

  /// Argmax class per node from an inference round; ties -> lowest class.
  std::vector<int> predict(std::span<const NodeId> nodes,
                           const FeatureOverride* override_rows = nullptr);

  // Building blocks for incremental evaluation of many single-victim
  // perturbations against one clean pass.
  std::vector<ModelCache> inference_caches() const;
  Matrix receive_upstream(int k, const Matrix& embeddings);
  Matrix top_logits(const Matrix& concatenated) const;

  std::vector<GnnParams> bottom_params() const;
  const TopParams& top_params() const;
  void load_params(const std::vector<GnnParams>& bottoms, const TopParams& top);

 private:
  PartyState& mutable_party(int k);

  FederationConfig config_;
  NodeId num_nodes_ = 0;
  Index num_classes_ = 0;
  int active_ = 0;
  int adversary_ = -1;
  std::vector<PartyState> parties_;
  Defense defense_;
  std::vector<MessageRecord> log_;
  std::int64_t round_ = 0;
  std::uint64_t version_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  std::optional<double> mta;
  std::optional<double> asr;
};

using History = std::vector<EpochRecord>;

/// Evaluator-side view used to fill the history; never handed to a party.
struct GroundTruth {
  std::span<const int> labels;  // all nodes
  NodeSet test;
};

/// `epochs` full-graph steps over V_L. MTA is recorded every `mta_every`
/// epochs and always at the last one. Throws DivergenceError on a
/// non-finite loss.
History train_clean(Federation& federation, const DataSplit& split, const GroundTruth& truth,
                    int epochs, int mta_every = 1);

}  // namespace bvg
