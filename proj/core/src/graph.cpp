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
#include "bvg/graph.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "bvg/error.hpp"

namespace bvg {

void Graph::validate() const {
  if (num_nodes < 0) throw IntegrityError("negative node count");
  if (features.rows() != num_nodes) {
    throw IntegrityError(fmt::format("{}: feature matrix has {} rows for {} nodes", name,
                                     features.rows(), num_nodes));
  }
  if (static_cast<NodeId>(labels.size()) != num_nodes) {
    throw IntegrityError(fmt::format("{}: {} labels for {} nodes", name, labels.size(), num_nodes));
  }
  for (NodeId i = 0; i < num_nodes; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw IntegrityError(fmt::format("{}: node {} has label {} outside [0, {})", name, i,
                                       labels[i], num_classes));
    }
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (e.u < 0 || e.v >= num_nodes || e.u >= e.v) {
      throw IntegrityError(fmt::format("{}: edge ({}, {}) is not a canonical pair of valid nodes",
                                       name, e.u, e.v));
    }
    if (k > 0 && !(edges[k - 1] < e)) {
      throw IntegrityError(fmt::format("{}: edge list unsorted or duplicated at ({}, {})", name,
                                       e.u, e.v));
    }
  }
}

std::vector<std::vector<NodeId>> adjacency_lists(NodeId num_nodes, const EdgeList& edges) {
  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(num_nodes));
  for (const Edge& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

EdgeList canonicalize_edges(EdgeList edges) {
  std::erase_if(edges, [](const Edge& e) { return e.u == e.v; });
  for (Edge& e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace bvg
