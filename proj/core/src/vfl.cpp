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
#include "bvg/vfl.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bvg/error.hpp"
#include "bvg/metrics.hpp"

namespace bvg {

std::string_view to_string(Propagation p) {
  return p == Propagation::strict ? "strict" : "transductive";
}

Propagation parse_propagation(std::string_view text) {
  if (text == "transductive") return Propagation::transductive;
  if (text == "strict") return Propagation::strict;
  throw ValidationError(fmt::format("unknown propagation mode '{}'", text));
}

std::string_view to_string(MessageKind kind) {
  return kind == MessageKind::embedding ? "embedding" : "embedding_gradient";
}

void FederationConfig::validate() const {
  if (hidden < 1 || embedding < 1) throw ValidationError("hidden and embedding widths must be >= 1");
  if (top_hidden < 0) throw ValidationError("top_hidden must be >= 0");
  if (model == ModelKind::gat && (gat.heads < 1 || hidden % gat.heads != 0)) {
    throw ValidationError(fmt::format("gat heads ({}) must divide hidden ({})", gat.heads, hidden));
  }
  if (!(adam.lr > 0.0)) throw ValidationError("learning rate must be > 0");
  defense.validate();
}

int LabelView::label_of(NodeId v) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), v);
  if (it == nodes.end() || *it != v) {
    throw ProtocolError(fmt::format("node {} is outside the active party's label view", v));
  }
  return labels[static_cast<std::size_t>(it - nodes.begin())];
}

Federation::Federation(const Graph& graph, const DataSplit& split,
                       const VerticalPartition& partition, const FederationConfig& config)
    : config_(config),
      num_nodes_(graph.num_nodes),
      num_classes_(graph.num_classes),
      active_(partition.active_index),
      adversary_(partition.adversary_index),
      defense_(config.defense) {
  config_.validate();
  partition.validate(graph);
  const int k_parties = partition.num_parties;
  if (active_ < 0 || active_ >= k_parties) {
    throw IntegrityError(fmt::format("active index {} outside [0, {})", active_, k_parties));
  }
  if (adversary_ >= k_parties || adversary_ < -1 || (adversary_ >= 0 && adversary_ == active_)) {
    throw IntegrityError(fmt::format("adversary index {} is invalid for {} parties", adversary_,
                                     k_parties));
  }

  std::vector<char> is_test(static_cast<std::size_t>(num_nodes_), 0);
  for (NodeId v : split.test) is_test[static_cast<std::size_t>(v)] = 1;

  parties_.resize(static_cast<std::size_t>(k_parties));
  for (int k = 0; k < k_parties; ++k) {
    PartyState& p = parties_[static_cast<std::size_t>(k)];
    p.index = k;
    p.role = k == active_ ? PartyRole::active : PartyRole::passive;
    p.slice = partition.feature_slices[static_cast<std::size_t>(k)];
    p.features = slice_features(graph, p.slice);
    if (config_.propagation == Propagation::strict) {
      p.train_features = p.features;
      p.train_features.prune([&](Index r, Index, double) { return !is_test[r]; });
    }
    p.graph = LocalGraph::build(num_nodes_, partition.edge_subsets[static_cast<std::size_t>(k)]);
    ModelDims dims{p.slice.width(), config_.hidden, config_.embedding};
    p.params = init_gnn_params(config_.model, dims, config_.gat,
                               derive_seed(config_.init_seed, fmt::format("bottom/{}", k)));
  }

  PartyState& act = mutable_party(active_);
  ActiveState state;
  state.top = init_top_params(config_.embedding * k_parties, config_.top_hidden, num_classes_,
                              derive_seed(config_.init_seed, "top"));
  state.labels.nodes = split.train_labeled;
  std::sort(state.labels.nodes.begin(), state.labels.nodes.end());
  for (NodeId v : state.labels.nodes) state.labels.labels.push_back(graph.labels[v]);
  act.active = std::move(state);
}

const PartyState& Federation::party(int k) const {
  if (k < 0 || k >= num_parties()) throw ContractError(fmt::format("no party {}", k));
  return parties_[static_cast<std::size_t>(k)];
}

PartyState& Federation::mutable_party(int k) {
  return const_cast<PartyState&>(std::as_const(*this).party(k));
}

const SparseMatrix& Federation::features_for(int k, RoundMode mode) const {
  const PartyState& p = party(k);
  if (mode == RoundMode::training && config_.propagation == Propagation::strict) {
    return p.train_features;
  }
  return p.features;
}

Matrix Federation::receive_upstream(int k, const Matrix& embeddings) {
  if (k == active_) return embeddings;
  log_.push_back({round_, k, active_, MessageKind::embedding, embeddings.rows(), embeddings.cols()});
  return defense_.on_upstream(embeddings);
}

Matrix Federation::top_logits(const Matrix& concatenated) const {
  return top_forward(party(active_).active->top, concatenated);
}

ForwardResult Federation::forward_round(std::span<const NodeId> nodes,
                                        const FeatureOverride* override_rows, RoundMode mode) {
  if (nodes.empty()) throw ContractError("forward_round needs a nonempty node set");
  for (NodeId v : nodes) {
    if (v < 0 || v >= num_nodes_) throw ContractError(fmt::format("node {} out of range", v));
  }
  if (override_rows != nullptr) {
    if (adversary_ < 0 || override_rows->party != adversary_) {
      throw ProtocolError(fmt::format("feature override targets party {}, which is not the adversary",
                                      override_rows->party));
    }
    const Index width = party(adversary_).slice.width();
    for (const auto& [v, row] : override_rows->rows) {
      if (v < 0 || v >= num_nodes_ || row.size() != width) {
        throw ContractError(fmt::format("override row for node {} is malformed", v));
      }
    }
  }

  ++round_;
  ForwardResult out;
  out.nodes.assign(nodes.begin(), nodes.end());
  out.mode = mode;
  if (override_rows != nullptr) out.override_rows = *override_rows;
  out.version = version_;

  const int k_parties = num_parties();
  const Index d = config_.embedding;
  Matrix concatenated(static_cast<Index>(nodes.size()), d * k_parties);
  out.caches.resize(static_cast<std::size_t>(k_parties));
  out.messages.nodes = out.nodes;
  for (int k = 0; k < k_parties; ++k) {
    const PartyState& p = party(k);
    const SparseMatrix& base = features_for(k, mode);
    const bool injected = out.override_rows && k == adversary_;
    FeatureInput x = injected ? FeatureInput(base, out.override_rows->rows) : FeatureInput(base);
    out.caches[static_cast<std::size_t>(k)] = gnn_forward(p.params, p.graph, x);
    const Matrix& h = out.caches[static_cast<std::size_t>(k)].output;
    Matrix rows(static_cast<Index>(nodes.size()), d);
    for (std::size_t i = 0; i < nodes.size(); ++i) rows.row(static_cast<Index>(i)) = h.row(nodes[i]);
    Matrix received = receive_upstream(k, rows);
    concatenated.middleCols(k * d, d) = received;
    out.messages.upstream.push_back(std::move(received));
  }
  out.logits = top_forward(party(active_).active->top, concatenated, &out.top);
  return out;
}

LossResult Federation::active_loss(const ForwardResult& forward) const {
  const LabelView& view = party(active_).active->labels;
  std::vector<int> labels;
  labels.reserve(forward.nodes.size());
  for (NodeId v : forward.nodes) labels.push_back(view.label_of(v));
  return cross_entropy_loss(forward.logits, labels);
}

RoundMessages Federation::backward_round(const ForwardResult& forward, const Matrix& dlogits,
                                         const DownstreamHook& hook) {
  if (forward.version != version_) {
    throw ContractError("backward_round called with a stale forward cache");
  }
  if (forward.mode != RoundMode::training) {
    throw ContractError("backward_round needs a training-mode forward pass");
  }
  if (dlogits.rows() != forward.logits.rows() || dlogits.cols() != forward.logits.cols()) {
    throw ContractError("dlogits shape does not match the forward logits");
  }
  PartyState& act = mutable_party(active_);
  const TopGradients top_grads = top_backward(act.active->top, forward.top, dlogits);

  const int k_parties = num_parties();
  const Index d = config_.embedding;
  RoundMessages messages = forward.messages;
  messages.downstream.clear();
  for (int k = 0; k < k_parties; ++k) {
    Matrix g = top_grads.input.middleCols(k * d, d);
    if (k != active_) {
      g = defense_.on_downstream(g);
      log_.push_back({round_, active_, k, MessageKind::embedding_gradient, g.rows(), g.cols()});
    }
    messages.downstream.push_back(std::move(g));
  }
  if (hook) {
    if (adversary_ < 0) throw ProtocolError("downstream hook installed without an adversary");
    hook(messages.nodes, messages.downstream[static_cast<std::size_t>(adversary_)]);
  }

  adam_step(act.active->top.tensors, top_grads.params, act.active->top_opt, config_.adam);
  for (int k = 0; k < k_parties; ++k) {
    PartyState& p = mutable_party(k);
    Matrix upstream = Matrix::Zero(num_nodes_, d);
    const Matrix& g = messages.downstream[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < forward.nodes.size(); ++i) {
      upstream.row(forward.nodes[i]) += g.row(static_cast<Index>(i));
    }
    const SparseMatrix& base = features_for(k, forward.mode);
    const bool injected = forward.override_rows && k == adversary_;
    FeatureInput x = injected ? FeatureInput(base, forward.override_rows->rows) : FeatureInput(base);
    const ModelGradients grads = model_backward(p.params, p.graph, x,
                                                forward.caches[static_cast<std::size_t>(k)],
                                                upstream, {}, true);
    adam_step(p.params.tensors, grads.params, p.opt, config_.adam);
  }
  ++version_;
  return messages;
}

std::vector<int> Federation::predict(std::span<const NodeId> nodes,
                                     const FeatureOverride* override_rows) {
  if (nodes.empty()) return {};
  return argmax_rows(forward_round(nodes, override_rows, RoundMode::inference).logits);
}

std::vector<ModelCache> Federation::inference_caches() const {
  std::vector<ModelCache> caches;
  for (int k = 0; k < num_parties(); ++k) {
    const PartyState& p = party(k);
    caches.push_back(gnn_forward(p.params, p.graph, FeatureInput(p.features)));
  }
  return caches;
}

std::vector<GnnParams> Federation::bottom_params() const {
  std::vector<GnnParams> out;
  for (const PartyState& p : parties_) out.push_back(p.params);
  return out;
}

const TopParams& Federation::top_params() const { return party(active_).active->top; }

void Federation::load_params(const std::vector<GnnParams>& bottoms, const TopParams& top) {
  if (static_cast<int>(bottoms.size()) != num_parties()) {
    throw ContractError(fmt::format("checkpoint has {} bottom models, federation has {} parties",
                                    bottoms.size(), num_parties()));
  }
  for (int k = 0; k < num_parties(); ++k) {
    const GnnParams& cur = party(k).params;
    const GnnParams& next = bottoms[static_cast<std::size_t>(k)];
    bool same = cur.kind == next.kind && cur.tensors.size() == next.tensors.size();
    for (std::size_t t = 0; same && t < cur.tensors.size(); ++t) {
      same = cur.tensors[t].rows() == next.tensors[t].rows() &&
             cur.tensors[t].cols() == next.tensors[t].cols();
    }
    if (!same) throw ContractError(fmt::format("checkpoint shape mismatch for party {}", k));
  }
  const TopParams& cur_top = top_params();
  if (cur_top.input != top.input || cur_top.hidden != top.hidden || cur_top.classes != top.classes) {
    throw ContractError("checkpoint top-model shape mismatch");
  }
  for (int k = 0; k < num_parties(); ++k) {
    PartyState& p = mutable_party(k);
    p.params = bottoms[static_cast<std::size_t>(k)];
    p.opt = {};
  }
  mutable_party(active_).active->top = top;
  mutable_party(active_).active->top_opt = {};
  ++version_;
}

History train_clean(Federation& federation, const DataSplit& split, const GroundTruth& truth,
                    int epochs, int mta_every) {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  History history;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    ForwardResult fwd = federation.forward_round(split.train_labeled);
    const LossResult loss = federation.active_loss(fwd);
    if (!std::isfinite(loss.loss)) {
      throw DivergenceError(fmt::format("non-finite training loss at epoch {}", epoch));
    }
    federation.backward_round(fwd, loss.dlogits);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss.loss;
    if (epoch == epochs || (mta_every > 0 && epoch % mta_every == 0)) {
      rec.mta = compute_mta(federation.predict(truth.test), truth.labels, truth.test);
    }
    history.push_back(rec);
  }
  return history;
}

}  // namespace bvg
