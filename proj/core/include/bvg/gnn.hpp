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

// Two-layer bottom GNNs (GCN, SGC, GAT) and the linear top model, with exact
// reverse-mode gradients for both parameters and inputs.
//
// Shapes follow the node-major convention: X is N x F_k, embeddings are N x d.
// Graph layers carry no bias terms.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "bvg/types.hpp"

namespace bvg {

enum class ModelKind { gcn, sgc, gat };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct ModelDims {
  Index input = 0;       // F_k, the party's feature-slice width
  Index hidden = 32;
  Index embedding = 16;  // d
};

struct GatOptions {
  int heads = 1;  // first-layer heads, concatenated; hidden must be divisible
  double leaky_slope = 0.2;
};

/// Party-local structure: Â = D̃^{-1/2}(A+I)D̃^{-1/2} for GCN/SGC, and the
/// self-loop-augmented neighbourhoods (CSR) for GAT. Built from one party's
/// edge subset only.
struct LocalGraph {
  NodeId num_nodes = 0;
  EdgeList edges;
  SparseMatrix normalized;         // N x N, symmetric
  std::vector<Index> nbr_offsets;  // size N+1
  std::vector<NodeId> nbr;         // neighbours of i (including i), sorted

  static LocalGraph build(NodeId num_nodes, const EdgeList& edges);

  std::span<const NodeId> neighbourhood(NodeId i) const {
    return {nbr.data() + nbr_offsets[i], nbr.data() + nbr_offsets[i + 1]};
  }
};

/// Bottom-model parameters. `tensors` layout per kind:
///   gcn: [W1 (F x h), W2 (h x d)]
///   sgc: [W (F x d)]
///   gat: [W1 (F x h), att1_self (heads x h/heads), att1_nbr (heads x h/heads),
///         W2 (h x d), att2_self (1 x d), att2_nbr (1 x d)]
/// For GAT the score of edge i <- j is LeakyReLU(a_self·z_i + a_nbr·z_j),
/// i.e. a^T [z_i || z_j] with a split into its two halves.
struct GnnParams {
  ModelKind kind = ModelKind::gcn;
  ModelDims dims;
  GatOptions gat;
  std::vector<Matrix> tensors;

  /// First linear map applied to the raw features (W1, or W for SGC).
  const Matrix& input_weight() const { return tensors.front(); }
  Index input_width() const { return tensors.front().cols(); }
  void check_finite() const;
};

GnnParams init_gnn_params(ModelKind kind, const ModelDims& dims, const GatOptions& gat,
                          std::uint64_t seed);

/// Feature matrix seen by a bottom model: a sparse base plus optional dense
/// replacement rows. Replacement is how triggers are injected without ever
/// touching the party's stored features.
class FeatureInput {
 public:
  explicit FeatureInput(const SparseMatrix& base) : base_(&base) {}
  FeatureInput(const SparseMatrix& base, const std::map<NodeId, RowVector>& overrides)
      : base_(&base), overrides_(&overrides) {}

  Index rows() const { return base_->rows(); }
  Index cols() const { return base_->cols(); }
  const SparseMatrix& base() const { return *base_; }
  bool has_overrides() const { return overrides_ != nullptr && !overrides_->empty(); }
  const std::map<NodeId, RowVector>* overrides() const { return overrides_; }

  RowVector row(NodeId i) const;
  /// X * W with overrides applied.
  Matrix times(const Matrix& w) const;
  /// X^T * G with overrides applied.
  Matrix transpose_times(const Matrix& g) const;
  Matrix to_dense() const;

 private:
  const SparseMatrix* base_;
  const std::map<NodeId, RowVector>* overrides_ = nullptr;
};

/// Intermediates of one bottom-model forward pass.
struct ModelCache {
  ModelKind kind = ModelKind::gcn;
  Matrix xw;      // X * W1 (or X * W for SGC), N x input_width
  Matrix pre1;    // GCN: Â·XW1; SGC: Â·XW; GAT: layer-1 aggregate (pre-ReLU)
  Matrix hidden;  // ReLU(pre1); unused by SGC
  Matrix z2;      // GCN/GAT: hidden * W2
  // GAT per-edge attention state, aligned with LocalGraph::nbr.
  Matrix att1_pre;    // nnz x heads, score before LeakyReLU
  Matrix att1_alpha;  // nnz x heads
  Vector att2_pre;    // nnz
  Vector att2_alpha;  // nnz
  Matrix output;      // N x d
};

ModelCache gnn_forward(const GnnParams& params, const LocalGraph& graph, const FeatureInput& x);

/// H = Â·ReLU(Â·X·W1)·W2.
Matrix gcn_forward(const GnnParams& params, const LocalGraph& graph, const FeatureInput& x);
/// H = Â²·X·W.
Matrix sgc_forward(const GnnParams& params, const LocalGraph& graph, const FeatureInput& x);
/// Two attention layers with a ReLU in between.
Matrix gat_forward(const GnnParams& params, const LocalGraph& graph, const FeatureInput& x);

struct ModelGradients {
  std::vector<Matrix> params;  // same layout as GnnParams::tensors (empty if not requested)
  Matrix input_rows;           // one row per requested input row, F_k wide
};

/// Reverse pass. `upstream` is dL/dH (N x d). Input gradients are produced
/// only for `input_rows`, which keeps the attacker's per-epoch cost
/// proportional to its rings rather than N x F_k.
ModelGradients model_backward(const GnnParams& params, const LocalGraph& graph,
                              const FeatureInput& x, const ModelCache& cache,
                              const Matrix& upstream, std::span<const NodeId> input_rows,
                              bool want_param_grads = true);

/// Embedding rows after perturbing XW by `xw_delta` (node -> delta of that
/// node's XW row), evaluated incrementally from a clean full-graph cache.
/// Exact; touches only the receptive field of the perturbed nodes.
Matrix embed_rows_patched(const GnnParams& params, const LocalGraph& graph,
                          const ModelCache& clean, const std::map<NodeId, RowVector>& xw_delta,
                          std::span<const NodeId> rows);

/// GAT first/second layer attention coefficients, exposed for tests:
/// entry k corresponds to edge (i -> nbr[k]) in CSR order.
Matrix gat_layer1_attention(const GnnParams& params, const LocalGraph& graph,
                            const FeatureInput& x);

// --- top model -----------------------------------------------------------

/// Linear head over concatenated party embeddings, optionally with one
/// hidden ReLU layer. Layout: [W (K*d x C), b (1 x C)] or
/// [Wh (K*d x t), bh (1 x t), W (t x C), b (1 x C)].
struct TopParams {
  Index input = 0;
  Index hidden = 0;
  Index classes = 0;
  std::vector<Matrix> tensors;
};

TopParams init_top_params(Index input, Index hidden, Index classes, std::uint64_t seed);

struct TopCache {
  Matrix input;
  Matrix pre_hidden;
  Matrix hidden;
};

Matrix top_forward(const TopParams& params, const Matrix& concatenated, TopCache* cache = nullptr);

struct TopGradients {
  std::vector<Matrix> params;
  Matrix input;  // dL/d(concatenated embeddings)
};

TopGradients top_backward(const TopParams& params, const TopCache& cache, const Matrix& dlogits);

struct LossResult {
  double loss = 0.0;
  Matrix dlogits;  // same shape as logits
};

/// Mean softmax cross-entropy over the rows of `logits`.
LossResult cross_entropy_loss(const Matrix& logits, std::span<const int> labels);

// --- optimizer -----------------------------------------------------------

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, AdamState& state,
               const AdamOptions& options);

// --- checkpoints ---------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const std::vector<GnnParams>& bottoms,
                     const TopParams& top);
void load_checkpoint(const std::filesystem::path& path, std::vector<GnnParams>& bottoms,
                     TopParams& top);

}  // namespace bvg
