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

#include <string>
#include <vector>

#include "bvg/types.hpp"

namespace bvg {

/// Global attributed graph G = (V, E, X) with ground-truth labels for every
/// node. Labels are never masked here; DataSplit decides who may see them.
struct Graph {
  std::string name;
  NodeId num_nodes = 0;
  EdgeList edges;          // sorted, unique, u < v, no self-loops
  SparseMatrix features;   // num_nodes x num_features
  std::vector<int> labels; // one per node, in [0, num_classes)
  int num_classes = 0;
  std::vector<std::string> class_names;
  // Number of link lines in the raw release before de-duplication. This is
  // the figure usually quoted as the dataset's edge count.
  std::size_t raw_link_count = 0;

  Index num_features() const { return features.cols(); }

  // Throws IntegrityError when any structural invariant is broken.
  void validate() const;
};

/// Adjacency lists built from an edge list (both directions, no self-loops).
std::vector<std::vector<NodeId>> adjacency_lists(NodeId num_nodes, const EdgeList& edges);

/// Sorts, removes duplicates and self-loops, orients each pair as u < v.
EdgeList canonicalize_edges(EdgeList edges);

}  // namespace bvg
