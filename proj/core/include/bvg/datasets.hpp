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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bvg/graph.hpp"

namespace bvg {

struct DataSplit {
  NodeSet train_labeled;  // V_L
  NodeSet test;           // V_T
  std::uint64_t seed = 0;
};

/// Column block [begin, end) of the global feature matrix owned by one party,
/// expressed over the permuted column order.
struct FeatureSlice {
  std::vector<Index> columns;  // global column ids, in slice order
  Index width() const { return static_cast<Index>(columns.size()); }
};

struct VerticalPartition {
  int num_parties = 0;
  std::vector<FeatureSlice> feature_slices;
  std::vector<EdgeList> edge_subsets;
  int adversary_index = 1;
  int active_index = 0;
  std::uint64_t seed = 0;

  // Throws IntegrityError if the partition does not cover `graph` exactly.
  void validate(const Graph& graph) const;
};

/// Reads `<name>.content` / `<name>.cites` from `directory` (or from
/// `directory/<name>/`). Content lines are `id f_1 ... f_F label`; cites lines
/// are `id id`. Edges are symmetrized and de-duplicated.
Graph load_planetoid(const std::filesystem::path& directory, std::string_view dataset_name);

/// Row-normalizes features so that every nonzero row sums to one.
Graph normalize_features(Graph graph);

/// Feature scaling applied by load_dataset: `raw` keeps file values, `row`
/// applies normalize_features.
enum class FeatureScaling { raw, row };

std::string_view to_string(FeatureScaling scaling);
FeatureScaling parse_feature_scaling(std::string_view text);

DataSplit split_train_test(const Graph& graph, double train_fraction, std::uint64_t seed);

VerticalPartition partition_vertical(const Graph& graph, int num_parties, int adversary_index,
                                     int active_index, std::uint64_t seed);

NodeSet sample_target_nodes(const Graph& graph, const DataSplit& split, int target_class,
                            int count, std::uint64_t seed);

/// Columns of `graph.features` owned by `slice`, as an N x F_k sparse matrix.
SparseMatrix slice_features(const Graph& graph, const FeatureSlice& slice);

// --- cached container -----------------------------------------------------

void save_graph_cache(const Graph& graph, const std::filesystem::path& path);
Graph load_graph_cache(const std::filesystem::path& path);

/// Content fingerprint over features, edges and labels (FNV-1a 64).
std::uint64_t graph_content_hash(const Graph& graph);

/// Graph for `dataset_name` under `scaling`: served from `<data_dir>/cache/`
/// when a cache exists, otherwise loaded from `<data_dir>/raw/`, scaled and cached.
Graph load_dataset(const std::filesystem::path& data_dir, std::string_view dataset_name,
                   FeatureScaling scaling = FeatureScaling::raw);

/// Cache file used by load_dataset.
std::filesystem::path dataset_cache_path(const std::filesystem::path& data_dir,
                                         std::string_view dataset_name, FeatureScaling scaling);

/// Published statistics (nodes, edges, features, classes) for known names.
struct DatasetStats {
  NodeId nodes = 0;
  std::size_t edges = 0;
  Index features = 0;
  int classes = 0;
};
std::optional<DatasetStats> published_stats(std::string_view dataset_name);

}  // namespace bvg
