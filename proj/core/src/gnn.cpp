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
#include "bvg/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "bvg/error.hpp"
#include "bvg/rng.hpp"

namespace bvg {
namespace {

enum GcnSlot { kGcnW1 = 0, kGcnW2 = 1 };
enum GatSlot { kGatW1 = 0, kGatAtt1Self, kGatAtt1Nbr, kGatW2, kGatAtt2Self, kGatAtt2Nbr };

Matrix glorot(Index rows, Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

void relu_backward_inplace(Matrix& grad, const Matrix& pre) {
  for (Index i = 0; i < grad.size(); ++i) {
    if (!(pre.data()[i] > 0.0)) grad.data()[i] = 0.0;
  }
}

void require_shape(const Matrix& m, Index rows, Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ContractError(fmt::format("{}: expected {}x{}, got {}x{}", what, rows, cols, m.rows(),
                                    m.cols()));
  }
}

void check_inputs(const GnnParams& params, const LocalGraph& graph, const FeatureInput& x) {
  if (x.rows() != graph.num_nodes) {
    throw ContractError(fmt::format("feature rows {} != graph nodes {}", x.rows(), graph.num_nodes));
  }
  if (x.cols() != params.input_weight().rows()) {
    throw ContractError(fmt::format("feature width {} != model input width {}", x.cols(),
                                    params.input_weight().rows()));
  }
}

double leaky(double v, double slope) { return v > 0.0 ? v : slope * v; }
double leaky_grad(double v, double slope) { return v > 0.0 ? 1.0 : slope; }

// One multi-head attention layer over CSR neighbourhoods. `z` is N x (H*w);
// att_self/att_nbr are H x w.
struct AttentionLayer {
  const LocalGraph& g;
  const Matrix& att_self;
  const Matrix& att_nbr;
  double slope;

  Index heads() const { return att_self.rows(); }
  Index width() const { return att_self.cols(); }

  // Scores s_self (N x H) and s_nbr (N x H).
  void scores(const Matrix& z, Matrix& s_self, Matrix& s_nbr) const {
    const Index n = z.rows();
    s_self.resize(n, heads());
    s_nbr.resize(n, heads());
    for (Index h = 0; h < heads(); ++h) {
      const auto block = z.middleCols(h * width(), width());
      s_self.col(h) = block * att_self.row(h).transpose();
      s_nbr.col(h) = block * att_nbr.row(h).transpose();
    }
  }

  // Fills pre/alpha (nnz x H) and out (N x H*w).
  void forward(const Matrix& z, Matrix& pre, Matrix& alpha, Matrix& out) const {
    Matrix s_self, s_nbr;
    scores(z, s_self, s_nbr);
    const auto nnz = static_cast<Index>(g.nbr.size());
    pre.resize(nnz, heads());
    alpha.resize(nnz, heads());
    out.setZero(z.rows(), z.cols());
    for (NodeId i = 0; i < g.num_nodes; ++i) {
      const Index begin = g.nbr_offsets[i];
      const Index end = g.nbr_offsets[i + 1];
      for (Index h = 0; h < heads(); ++h) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Index k = begin; k < end; ++k) {
          pre(k, h) = s_self(i, h) + s_nbr(g.nbr[k], h);
          mx = std::max(mx, leaky(pre(k, h), slope));
        }
        double denom = 0.0;
        for (Index k = begin; k < end; ++k) {
          alpha(k, h) = std::exp(leaky(pre(k, h), slope) - mx);
          denom += alpha(k, h);
        }
        for (Index k = begin; k < end; ++k) {
          alpha(k, h) /= denom;
          out.row(i).segment(h * width(), width()) +=
              alpha(k, h) * z.row(g.nbr[k]).segment(h * width(), width());
        }
      }
    }
  }

  // Output row of node i given a row accessor for z.
  template <typename RowFn>
  RowVector node_output(NodeId i, RowFn&& z_row) const {
    const Index begin = g.nbr_offsets[i];
    const Index end = g.nbr_offsets[i + 1];
    RowVector out = RowVector::Zero(heads() * width());
    const RowVector zi = z_row(i);
    std::vector<double> e(static_cast<std::size_t>(end - begin));
    for (Index h = 0; h < heads(); ++h) {
      const double si = zi.segment(h * width(), width()).dot(att_self.row(h));
      double mx = -std::numeric_limits<double>::infinity();
      for (Index k = begin; k < end; ++k) {
        const RowVector zj = z_row(g.nbr[k]);
        e[k - begin] = leaky(si + zj.segment(h * width(), width()).dot(att_nbr.row(h)), slope);
        mx = std::max(mx, e[k - begin]);
      }
      double denom = 0.0;
      for (auto& v : e) {
        v = std::exp(v - mx);
        denom += v;
      }
      for (Index k = begin; k < end; ++k) {
        out.segment(h * width(), width()) +=
            (e[k - begin] / denom) * z_row(g.nbr[k]).segment(h * width(), width());
      }
    }
    return out;
  }

  // Given dL/dout, returns dL/dz and accumulates attention-vector gradients.
  Matrix backward(const Matrix& z, const Matrix& pre, const Matrix& alpha, const Matrix& dout,
                  Matrix& d_att_self, Matrix& d_att_nbr) const {
    const Index n = z.rows();
    Matrix dz = Matrix::Zero(n, z.cols());
    Matrix ds_self = Matrix::Zero(n, heads());
    Matrix ds_nbr = Matrix::Zero(n, heads());
    std::vector<double> dalpha;
    for (NodeId i = 0; i < g.num_nodes; ++i) {
      const Index begin = g.nbr_offsets[i];
      const Index end = g.nbr_offsets[i + 1];
      dalpha.assign(static_cast<std::size_t>(end - begin), 0.0);
      for (Index h = 0; h < heads(); ++h) {
        const auto dout_ih = dout.row(i).segment(h * width(), width());
        if (dout_ih.isZero(0.0)) continue;
        double weighted = 0.0;
        for (Index k = begin; k < end; ++k) {
          const NodeId j = g.nbr[k];
          const double da = dout_ih.dot(z.row(j).segment(h * width(), width()));
          dalpha[k - begin] = da;
          weighted += alpha(k, h) * da;
          dz.row(j).segment(h * width(), width()) += alpha(k, h) * dout_ih;
        }
        for (Index k = begin; k < end; ++k) {
          const double de = alpha(k, h) * (dalpha[k - begin] - weighted);
          const double dpre = de * leaky_grad(pre(k, h), slope);
          ds_self(i, h) += dpre;
          ds_nbr(g.nbr[k], h) += dpre;
        }
      }
    }
    d_att_self.setZero(heads(), width());
    d_att_nbr.setZero(heads(), width());
    for (Index h = 0; h < heads(); ++h) {
      const auto block = z.middleCols(h * width(), width());
      d_att_self.row(h) = ds_self.col(h).transpose() * block;
      d_att_nbr.row(h) = ds_nbr.col(h).transpose() * block;
      dz.middleCols(h * width(), width()) += ds_self.col(h) * att_self.row(h) +
                                             ds_nbr.col(h) * att_nbr.row(h);
    }
    return dz;
  }
};

AttentionLayer layer1(const GnnParams& p, const LocalGraph& g) {
  return {g, p.tensors[kGatAtt1Self], p.tensors[kGatAtt1Nbr], p.gat.leaky_slope};
}
AttentionLayer layer2(const GnnParams& p, const LocalGraph& g) {
  return {g, p.tensors[kGatAtt2Self], p.tensors[kGatAtt2Nbr], p.gat.leaky_slope};
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gcn: return "gcn";
    case ModelKind::sgc: return "sgc";
    case ModelKind::gat: return "gat";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "gcn") return ModelKind::gcn;
  if (text == "sgc") return ModelKind::sgc;
  if (text == "gat") return ModelKind::gat;
  throw ValidationError(fmt::format("unknown model kind '{}' (expected gcn, sgc or gat)", text));
}

LocalGraph LocalGraph::build(NodeId num_nodes, const EdgeList& edges) {
  LocalGraph g;
  g.num_nodes = num_nodes;
  g.edges = edges;
  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(num_nodes));
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= num_nodes || e.v >= num_nodes || e.u == e.v) {
      throw ContractError(fmt::format("edge ({}, {}) invalid for {} nodes", e.u, e.v, num_nodes));
    }
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  g.nbr_offsets.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(num_nodes));
  for (NodeId i = 0; i < num_nodes; ++i) {
    auto& row = adj[i];
    row.push_back(i);
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    g.nbr_offsets[i + 1] = g.nbr_offsets[i] + static_cast<Index>(row.size());
    inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(row.size()));
  }
  g.nbr.reserve(static_cast<std::size_t>(g.nbr_offsets.back()));
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(g.nbr_offsets.back()));
  for (NodeId i = 0; i < num_nodes; ++i) {
    for (NodeId j : adj[i]) {
      g.nbr.push_back(j);
      triplets.emplace_back(i, j, inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
  }
  g.normalized.resize(num_nodes, num_nodes);
  g.normalized.setFromTriplets(triplets.begin(), triplets.end());
  g.normalized.makeCompressed();
  return g;
}

void GnnParams::check_finite() const {
  for (const auto& t : tensors) {
    if (!t.allFinite()) throw DivergenceError("bottom-model parameters became non-finite");
  }
}

GnnParams init_gnn_params(ModelKind kind, const ModelDims& dims, const GatOptions& gat,
                          std::uint64_t seed) {
  if (dims.input < 1 || dims.hidden < 1 || dims.embedding < 1) {
    throw ValidationError("model dimensions must be positive");
  }
  GnnParams p;
  p.kind = kind;
  p.dims = dims;
  p.gat = gat;
  Rng rng = make_rng(seed, "gnn-init");
  switch (kind) {
    case ModelKind::gcn:
      p.tensors.push_back(glorot(dims.input, dims.hidden, rng));
      p.tensors.push_back(glorot(dims.hidden, dims.embedding, rng));
      break;
    case ModelKind::sgc:
      p.tensors.push_back(glorot(dims.input, dims.embedding, rng));
      break;
    case ModelKind::gat: {
      if (gat.heads < 1 || dims.hidden % gat.heads != 0) {
        throw ValidationError(fmt::format("GAT hidden width {} not divisible by {} heads",
                                          dims.hidden, gat.heads));
      }
      const Index w = dims.hidden / gat.heads;
      p.tensors.push_back(glorot(dims.input, dims.hidden, rng));
      p.tensors.push_back(glorot(gat.heads, w, rng));
      p.tensors.push_back(glorot(gat.heads, w, rng));
      p.tensors.push_back(glorot(dims.hidden, dims.embedding, rng));
      p.tensors.push_back(glorot(1, dims.embedding, rng));
      p.tensors.push_back(glorot(1, dims.embedding, rng));
      break;
    }
  }
  return p;
}

// --- FeatureInput ----------------------------------------------------------

RowVector FeatureInput::row(NodeId i) const {
  if (overrides_ != nullptr) {
    const auto it = overrides_->find(i);
    if (it != overrides_->end()) return it->second;
  }
  return RowVector(base_->row(i));
}

Matrix FeatureInput::times(const Matrix& w) const {
  Matrix out = (*base_) * w;
  if (overrides_ != nullptr) {
    for (const auto& [node, values] : *overrides_) {
      if (values.size() != cols()) throw ContractError("override row width mismatch");
      out.row(node) = values * w;
    }
  }
  return out;
}

Matrix FeatureInput::transpose_times(const Matrix& g) const {
  Matrix out = base_->transpose() * g;
  if (overrides_ != nullptr) {
    for (const auto& [node, values] : *overrides_) {
      const RowVector base_row(base_->row(node));
      out.noalias() += (values - base_row).transpose() * g.row(node);
    }
  }
  return out;
}

Matrix FeatureInput::to_dense() const {
  Matrix out = Matrix(*base_);
  if (overrides_ != nullptr) {
    for (const auto& [node, values] : *overrides_) out.row(node) = values;
  }
  return out;
}

// --- forward ------------------------------------------------------------------

ModelCache gnn_forward(const GnnParams& params, const LocalGraph& graph, const FeatureInput& x) {
  check_inputs(params, graph, x);
  ModelCache c;
  c.kind = params.kind;
  const SparseMatrix& a = graph.normalized;
  switch (params.kind) {
    case ModelKind::gcn:
      c.xw = x.times(params.tensors[kGcnW1]);
      c.pre1 = a * c.xw;
      c.hidden = relu(c.pre1);
      c.z2 = c.hidden * params.tensors[kGcnW2];
      c.output = a * c.z2;
      break;
    case ModelKind::sgc:
      c.xw = x.times(params.tensors[0]);
      c.pre1 = a * c.xw;
      c.output = a * c.pre1;
      break;
    case ModelKind::gat: {
      c.xw = x.times(params.tensors[kGatW1]);
      layer1(params, graph).forward(c.xw, c.att1_pre, c.att1_alpha, c.pre1);
      c.hidden = relu(c.pre1);
      c.z2 = c.hidden * params.tensors[kGatW2];
      Matrix pre2, alpha2;
      layer2(params, graph).forward(c.z2, pre2, alpha2, c.output);
      c.att2_pre = pre2.col(0);
      c.att2_alpha = alpha2.col(0);
      break;
    }
  }
  return c;
}

Matrix gcn_forward(const GnnParams& params, const LocalGraph& graph, const FeatureInput& x) {
  if (params.kind != ModelKind::gcn) throw ContractError("gcn_forward needs GCN parameters");
  return gnn_forward(params, graph, x).output;
}

Matrix sgc_forward(const GnnParams& params, const LocalGraph& graph, const FeatureInput& x) {
  if (params.kind != ModelKind::sgc) throw ContractError("sgc_forward needs SGC parameters");
  return gnn_forward(params, graph, x).output;
}

Matrix gat_forward(const GnnParams& params, const LocalGraph& graph, const FeatureInput& x) {
  if (params.kind != ModelKind::gat) throw ContractError("gat_forward needs GAT parameters");
  return gnn_forward(params, graph, x).output;
}

Matrix gat_layer1_attention(const GnnParams& params, const LocalGraph& graph,
                            const FeatureInput& x) {
  if (params.kind != ModelKind::gat) throw ContractError("attention needs GAT parameters");
  return gnn_forward(params, graph, x).att1_alpha;
}

// --- backward -----------------------------------------------------------------

ModelGradients model_backward(const GnnParams& params, const LocalGraph& graph,
                              const FeatureInput& x, const ModelCache& cache,
                              const Matrix& upstream, std::span<const NodeId> input_rows,
                              bool want_param_grads) {
  check_inputs(params, graph, x);
  if (cache.kind != params.kind || cache.output.rows() != graph.num_nodes) {
    throw ContractError("model cache does not belong to these parameters/graph");
  }
  require_shape(upstream, graph.num_nodes, cache.output.cols(), "upstream gradient");
  const SparseMatrix& a = graph.normalized;
  ModelGradients out;
  Matrix dxw;
  switch (params.kind) {
    case ModelKind::gcn: {
      const Matrix dz2 = a * upstream;
      Matrix dhidden = dz2 * params.tensors[kGcnW2].transpose();
      relu_backward_inplace(dhidden, cache.pre1);
      dxw = a * dhidden;
      if (want_param_grads) {
        out.params.resize(2);
        out.params[kGcnW2] = cache.hidden.transpose() * dz2;
        out.params[kGcnW1] = x.transpose_times(dxw);
      }
      break;
    }
    case ModelKind::sgc: {
      const Matrix dp = a * upstream;
      dxw = a * dp;
      if (want_param_grads) out.params.push_back(x.transpose_times(dxw));
      break;
    }
    case ModelKind::gat: {
      Matrix d_att2_self, d_att2_nbr, d_att1_self, d_att1_nbr;
      const Matrix pre2 = cache.att2_pre;
      const Matrix alpha2 = cache.att2_alpha;
      const Matrix dz2 =
          layer2(params, graph).backward(cache.z2, pre2, alpha2, upstream, d_att2_self, d_att2_nbr);
      Matrix dhidden = dz2 * params.tensors[kGatW2].transpose();
      relu_backward_inplace(dhidden, cache.pre1);
      dxw = layer1(params, graph)
                .backward(cache.xw, cache.att1_pre, cache.att1_alpha, dhidden, d_att1_self,
                          d_att1_nbr);
      if (want_param_grads) {
        out.params.resize(6);
        out.params[kGatW1] = x.transpose_times(dxw);
        out.params[kGatAtt1Self] = std::move(d_att1_self);
        out.params[kGatAtt1Nbr] = std::move(d_att1_nbr);
        out.params[kGatW2] = cache.hidden.transpose() * dz2;
        out.params[kGatAtt2Self] = std::move(d_att2_self);
        out.params[kGatAtt2Nbr] = std::move(d_att2_nbr);
      }
      break;
    }
  }
  const Matrix& w_in = params.input_weight();
  out.input_rows.resize(static_cast<Index>(input_rows.size()), w_in.rows());
  for (std::size_t r = 0; r < input_rows.size(); ++r) {
    const NodeId node = input_rows[r];
    if (node < 0 || node >= graph.num_nodes) throw ContractError("input-gradient row out of range");
    out.input_rows.row(static_cast<Index>(r)) = dxw.row(node) * w_in.transpose();
  }
  return out;
}

// --- incremental evaluation ---------------------------------------------------

Matrix embed_rows_patched(const GnnParams& params, const LocalGraph& graph,
                          const ModelCache& clean, const std::map<NodeId, RowVector>& xw_delta,
                          std::span<const NodeId> rows) {
  const SparseMatrix& a = graph.normalized;
  const Index d = clean.output.cols();
  Matrix out(static_cast<Index>(rows.size()), d);
  if (xw_delta.empty()) {
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = clean.output.row(rows[r]);
    return out;
  }

  // Propagate a sparse row delta one hop through Â.
  auto propagate = [&a](const std::unordered_map<NodeId, RowVector>& delta) {
    std::unordered_map<NodeId, RowVector> next;
    for (const auto& [w, dw] : delta) {
      for (SparseMatrix::InnerIterator it(a, w); it; ++it) {
        const auto u = static_cast<NodeId>(it.col());
        auto [pos, inserted] = next.try_emplace(u, RowVector::Zero(dw.size()));
        pos->second += it.value() * dw;
      }
    }
    return next;
  };

  std::unordered_map<NodeId, RowVector> delta0(xw_delta.begin(), xw_delta.end());
  std::unordered_map<NodeId, RowVector> delta_out;

  switch (params.kind) {
    case ModelKind::gcn: {
      auto dpre = propagate(delta0);
      std::unordered_map<NodeId, RowVector> dz2;
      for (const auto& [u, dp] : dpre) {
        const RowVector h = (clean.pre1.row(u) + dp).cwiseMax(0.0);
        dz2.emplace(u, h * params.tensors[kGcnW2] - clean.z2.row(u));
      }
      delta_out = propagate(dz2);
      break;
    }
    case ModelKind::sgc:
      delta_out = propagate(propagate(delta0));
      break;
    case ModelKind::gat: {
      auto z1 = [&](NodeId j) -> RowVector {
        const auto it = delta0.find(j);
        return it == delta0.end() ? RowVector(clean.xw.row(j)) : RowVector(clean.xw.row(j) + it->second);
      };
      std::unordered_map<NodeId, RowVector> z2_new;
      const AttentionLayer l1 = layer1(params, graph);
      for (const auto& [w, unused] : delta0) {
        for (NodeId u : graph.neighbourhood(w)) {
          if (z2_new.contains(u)) continue;
          const RowVector h = l1.node_output(u, z1).cwiseMax(0.0);
          z2_new.emplace(u, h * params.tensors[kGatW2]);
        }
      }
      auto z2 = [&](NodeId j) -> RowVector {
        const auto it = z2_new.find(j);
        return it == z2_new.end() ? RowVector(clean.z2.row(j)) : it->second;
      };
      const AttentionLayer l2 = layer2(params, graph);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const NodeId v = rows[r];
        bool touched = false;
        for (NodeId u : graph.neighbourhood(v)) touched = touched || z2_new.contains(u);
        out.row(static_cast<Index>(r)) = touched ? l2.node_output(v, z2) : RowVector(clean.output.row(v));
      }
      return out;
    }
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const NodeId v = rows[r];
    RowVector row = clean.output.row(v);
    if (const auto it = delta_out.find(v); it != delta_out.end()) row += it->second;
    out.row(static_cast<Index>(r)) = row;
  }
  return out;
}

// --- top model ------------------------------------------------------------------

TopParams init_top_params(Index input, Index hidden, Index classes, std::uint64_t seed) {
  if (input < 1 || classes < 1 || hidden < 0) throw ValidationError("invalid top-model shape");
  TopParams p;
  p.input = input;
  p.hidden = hidden;
  p.classes = classes;
  Rng rng = make_rng(seed, "top-init");
  if (hidden > 0) {
    p.tensors.push_back(glorot(input, hidden, rng));
    p.tensors.push_back(Matrix::Zero(1, hidden));
    p.tensors.push_back(glorot(hidden, classes, rng));
  } else {
    p.tensors.push_back(glorot(input, classes, rng));
  }
  p.tensors.push_back(Matrix::Zero(1, classes));
  return p;
}

Matrix top_forward(const TopParams& params, const Matrix& concatenated, TopCache* cache) {
  if (concatenated.cols() != params.input) {
    throw ContractError(fmt::format("top model expects {} input columns, got {}", params.input,
                                    concatenated.cols()));
  }
  Matrix logits;
  if (params.hidden > 0) {
    Matrix pre = concatenated * params.tensors[0];
    pre.rowwise() += params.tensors[1].row(0);
    Matrix h = relu(pre);
    logits = h * params.tensors[2];
    logits.rowwise() += params.tensors[3].row(0);
    if (cache != nullptr) {
      cache->pre_hidden = std::move(pre);
      cache->hidden = std::move(h);
    }
  } else {
    logits = concatenated * params.tensors[0];
    logits.rowwise() += params.tensors[1].row(0);
  }
  if (cache != nullptr) cache->input = concatenated;
  return logits;
}

TopGradients top_backward(const TopParams& params, const TopCache& cache, const Matrix& dlogits) {
  require_shape(dlogits, cache.input.rows(), params.classes, "dL/dlogits");
  TopGradients g;
  if (params.hidden > 0) {
    Matrix dh = dlogits * params.tensors[2].transpose();
    relu_backward_inplace(dh, cache.pre_hidden);
    g.params.push_back(cache.input.transpose() * dh);
    g.params.push_back(dh.colwise().sum());
    g.params.push_back(cache.hidden.transpose() * dlogits);
    g.params.push_back(dlogits.colwise().sum());
    g.input = dh * params.tensors[0].transpose();
  } else {
    g.params.push_back(cache.input.transpose() * dlogits);
    g.params.push_back(dlogits.colwise().sum());
    g.input = dlogits * params.tensors[0].transpose();
  }
  return g;
}

LossResult cross_entropy_loss(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != logits.rows()) {
    throw ContractError("one label per logit row required");
  }
  LossResult r;
  r.dlogits.resize(logits.rows(), logits.cols());
  if (logits.rows() == 0) return r;
  const double inv_n = 1.0 / static_cast<double>(logits.rows());
  for (Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) throw ContractError("label outside the logit range");
    const double mx = logits.row(i).maxCoeff();
    const RowVector e = (logits.row(i).array() - mx).exp().matrix();
    const double z = e.sum();
    r.loss += (std::log(z) + mx - logits(i, y)) * inv_n;
    r.dlogits.row(i) = e / z;
    r.dlogits(i, y) -= 1.0;
    r.dlogits.row(i) *= inv_n;
  }
  return r;
}

// --- Adam -----------------------------------------------------------------------

void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, AdamState& state,
               const AdamOptions& options) {
  if (params.size() != grads.size()) throw ContractError("gradient list does not match parameters");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.v.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    require_shape(grads[t], params[t].rows(), params[t].cols(), "gradient");
    Matrix& m = state.m[t];
    Matrix& v = state.v[t];
    m = options.beta1 * m + (1.0 - options.beta1) * grads[t];
    v = options.beta2 * v + (1.0 - options.beta2) * grads[t].cwiseProduct(grads[t]);
    params[t].array() -=
        options.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + options.eps);
  }
}

}  // namespace bvg
