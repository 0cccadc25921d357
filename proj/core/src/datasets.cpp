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
#include "bvg/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "bvg/container.hpp"
#include "bvg/error.hpp"
#include "bvg/rng.hpp"

namespace bvg {
namespace fs = std::filesystem;

namespace {

constexpr int kMaxSplitRetries = 100;

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

fs::path locate(const fs::path& dir, std::string_view name, std::string_view ext) {
  const std::string file = fmt::format("{}.{}", name, ext);
  const fs::path flat = dir / file;
  if (fs::exists(flat)) return flat;
  const fs::path nested = dir / std::string(name) / file;
  if (fs::exists(nested)) return nested;
  throw LoadError(fmt::format("dataset file not found: {}", flat.string()));
}

std::uint64_t checked_seed_mix(std::uint64_t seed, int attempt) {
  return derive_seed(seed, fmt::format("split/{}", attempt));
}

}  // namespace

Graph load_planetoid(const fs::path& directory, std::string_view dataset_name) {
  const fs::path content_path = locate(directory, dataset_name, "content");
  const fs::path cites_path = locate(directory, dataset_name, "cites");

  std::ifstream content(content_path);
  if (!content) throw LoadError(fmt::format("cannot open {}", content_path.string()));

  std::unordered_map<std::string, NodeId> id_of;
  std::vector<std::string> raw_labels;
  std::vector<Triplet> triplets;
  Index num_features = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(content, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() < 3) {
      throw ParseError(fmt::format("{}:{}: expected 'id features... label'",
                                   content_path.string(), line_no));
    }
    const Index width = static_cast<Index>(tokens.size()) - 2;
    if (num_features < 0) num_features = width;
    if (width != num_features) {
      throw ParseError(fmt::format("{}:{}: {} feature tokens, expected {}", content_path.string(),
                                   line_no, width, num_features));
    }
    const NodeId node = static_cast<NodeId>(raw_labels.size());
    if (!id_of.emplace(std::string(tokens.front()), node).second) {
      throw ParseError(fmt::format("{}:{}: duplicate node id '{}'", content_path.string(), line_no,
                                   tokens.front()));
    }
    for (Index c = 0; c < width; ++c) {
      const std::string_view tok = tokens[static_cast<std::size_t>(c) + 1];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
        throw ParseError(fmt::format("{}:{}: bad feature value '{}'", content_path.string(),
                                     line_no, tok));
      }
      if (value != 0.0) triplets.emplace_back(node, c, value);
    }
    raw_labels.emplace_back(tokens.back());
  }
  if (raw_labels.empty()) throw ParseError(fmt::format("{}: no nodes", content_path.string()));

  Graph g;
  g.name = std::string(dataset_name);
  g.num_nodes = static_cast<NodeId>(raw_labels.size());
  g.features.resize(g.num_nodes, num_features);
  g.features.setFromTriplets(triplets.begin(), triplets.end());
  g.features.makeCompressed();

  std::vector<std::string> names = raw_labels;
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  g.class_names = names;
  g.num_classes = static_cast<int>(names.size());
  g.labels.reserve(raw_labels.size());
  for (const auto& label : raw_labels) {
    g.labels.push_back(static_cast<int>(
        std::lower_bound(names.begin(), names.end(), label) - names.begin()));
  }

  std::ifstream cites(cites_path);
  if (!cites) throw LoadError(fmt::format("cannot open {}", cites_path.string()));
  EdgeList edges;
  line_no = 0;
  while (std::getline(cites, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw ParseError(fmt::format("{}:{}: expected two node ids", cites_path.string(), line_no));
    }
    NodeId ends[2];
    for (int k = 0; k < 2; ++k) {
      const auto it = id_of.find(std::string(tokens[k]));
      if (it == id_of.end()) {
        throw IntegrityError(fmt::format("{}:{}: edge endpoint '{}' is not a known node",
                                         cites_path.string(), line_no, tokens[k]));
      }
      ends[k] = it->second;
    }
    ++g.raw_link_count;
    edges.push_back({ends[0], ends[1]});
  }
  g.edges = canonicalize_edges(std::move(edges));
  g.validate();
  return g;
}

Graph normalize_features(Graph graph) {
  SparseMatrix& x = graph.features;
  for (Index r = 0; r < x.outerSize(); ++r) {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(x, r); it; ++it) {
      if (it.value() < 0.0) {
        throw ValidationError(fmt::format("{}: negative feature at node {}, column {}",
                                          graph.name, r, it.col()));
      }
      sum += it.value();
    }
    if (sum == 0.0) continue;
    for (SparseMatrix::InnerIterator it(x, r); it; ++it) it.valueRef() /= sum;
  }
  return graph;
}

DataSplit split_train_test(const Graph& graph, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError(fmt::format("train_fraction must lie in (0, 1), got {}", train_fraction));
  }
  const NodeId n = graph.num_nodes;
  auto n_train = static_cast<NodeId>(std::floor(train_fraction * n + 1e-9));
  n_train = std::clamp<NodeId>(n_train, 1, std::max<NodeId>(1, n - 1));

  std::vector<NodeId> order(static_cast<std::size_t>(n));
  for (int attempt = 0; attempt < kMaxSplitRetries; ++attempt) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(checked_seed_mix(seed, attempt));
    std::shuffle(order.begin(), order.end(), rng);
    DataSplit split;
    split.seed = seed;
    split.train_labeled.assign(order.begin(), order.begin() + n_train);
    split.test.assign(order.begin() + n_train, order.end());
    std::sort(split.train_labeled.begin(), split.train_labeled.end());
    std::sort(split.test.begin(), split.test.end());
    std::vector<bool> seen(static_cast<std::size_t>(graph.num_classes), false);
    for (NodeId v : split.train_labeled) seen[graph.labels[v]] = true;
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return split;
  }
  throw ValidationError(fmt::format(
      "{}: could not draw a training set covering all {} classes with fraction {} after {} tries",
      graph.name, graph.num_classes, train_fraction, kMaxSplitRetries));
}

VerticalPartition partition_vertical(const Graph& graph, int num_parties, int adversary_index,
                                     int active_index, std::uint64_t seed) {
  const Index f = graph.num_features();
  if (num_parties < 2) throw ValidationError("a federation needs at least two parties");
  if (num_parties > f) {
    throw ValidationError(
        fmt::format("cannot split {} feature columns among {} parties", f, num_parties));
  }
  if (adversary_index == active_index) {
    throw ValidationError("the adversary must be a passive party (adversary_index == active_index)");
  }
  for (int idx : {adversary_index, active_index}) {
    if (idx < 0 || idx >= num_parties) {
      throw ValidationError(fmt::format("party index {} outside [0, {})", idx, num_parties));
    }
  }

  VerticalPartition p;
  p.num_parties = num_parties;
  p.adversary_index = adversary_index;
  p.active_index = active_index;
  p.seed = seed;

  std::vector<Index> columns(static_cast<std::size_t>(f));
  std::iota(columns.begin(), columns.end(), Index{0});
  Rng col_rng = make_rng(seed, "partition/columns");
  std::shuffle(columns.begin(), columns.end(), col_rng);
  const Index base = f / num_parties;
  const Index extra = f % num_parties;
  Index cursor = 0;
  for (int k = 0; k < num_parties; ++k) {
    const Index width = base + (k < extra ? 1 : 0);
    FeatureSlice slice;
    slice.columns.assign(columns.begin() + cursor, columns.begin() + cursor + width);
    cursor += width;
    p.feature_slices.push_back(std::move(slice));
  }

  EdgeList shuffled = graph.edges;
  Rng edge_rng = make_rng(seed, "partition/edges");
  std::shuffle(shuffled.begin(), shuffled.end(), edge_rng);
  p.edge_subsets.assign(static_cast<std::size_t>(num_parties), {});
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    p.edge_subsets[i % static_cast<std::size_t>(num_parties)].push_back(shuffled[i]);
  }
  for (auto& subset : p.edge_subsets) std::sort(subset.begin(), subset.end());
  return p;
}

void VerticalPartition::validate(const Graph& graph) const {
  if (num_parties < 1 || static_cast<int>(feature_slices.size()) != num_parties ||
      static_cast<int>(edge_subsets.size()) != num_parties) {
    throw IntegrityError("partition party count is inconsistent");
  }
  std::vector<int> owner(static_cast<std::size_t>(graph.num_features()), -1);
  for (int k = 0; k < num_parties; ++k) {
    for (Index c : feature_slices[k].columns) {
      if (c < 0 || c >= graph.num_features() || owner[c] != -1) {
        throw IntegrityError(fmt::format("feature column {} is out of range or owned twice", c));
      }
      owner[c] = k;
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw IntegrityError("feature slices do not cover every column");
  }
  EdgeList all;
  for (const auto& subset : edge_subsets) all.insert(all.end(), subset.begin(), subset.end());
  std::sort(all.begin(), all.end());
  if (all != graph.edges) throw IntegrityError("edge subsets do not partition the graph's edges");
}

NodeSet sample_target_nodes(const Graph& graph, const DataSplit& split, int target_class,
                            int count, std::uint64_t seed) {
  if (count < 1) throw ValidationError("target node count must be at least 1");
  NodeSet pool;
  for (NodeId v : split.train_labeled) {
    if (graph.labels[v] == target_class) pool.push_back(v);
  }
  if (static_cast<int>(pool.size()) < count) {
    throw ValidationError(fmt::format(
        "class {} has only {} labeled training nodes, {} requested", target_class, pool.size(),
        count));
  }
  Rng rng = make_rng(seed, "target-nodes");
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(count));
  std::sort(pool.begin(), pool.end());
  return pool;
}

SparseMatrix slice_features(const Graph& graph, const FeatureSlice& slice) {
  std::vector<Index> local(static_cast<std::size_t>(graph.num_features()), -1);
  for (Index k = 0; k < slice.width(); ++k) local[slice.columns[k]] = k;
  std::vector<Triplet> triplets;
  const SparseMatrix& x = graph.features;
  for (Index r = 0; r < x.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(x, r); it; ++it) {
      const Index c = local[it.col()];
      if (c >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  SparseMatrix out(graph.num_nodes, slice.width());
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

std::uint64_t graph_content_hash(const Graph& graph) {
  io::Fnv1a h;
  h.update(graph.name);
  SparseMatrix x = graph.features;
  x.makeCompressed();
  h.update_values(std::span<const int>(x.outerIndexPtr(), x.rows() + 1));
  h.update_values(std::span<const int>(x.innerIndexPtr(), x.nonZeros()));
  h.update_values(std::span<const double>(x.valuePtr(), x.nonZeros()));
  h.update_values(std::span<const Edge>(graph.edges));
  h.update_values(std::span<const int>(graph.labels));
  return h.digest();
}

void save_graph_cache(const Graph& graph, const fs::path& path) {
  std::vector<std::int64_t> flat_edges;
  flat_edges.reserve(graph.edges.size() * 2);
  for (const Edge& e : graph.edges) {
    flat_edges.push_back(e.u);
    flat_edges.push_back(e.v);
  }
  const std::vector<std::int64_t> labels(graph.labels.begin(), graph.labels.end());
  io::json doc{
      {"kind", "graph"},
      {"version", 1},
      {"manifest",
       {{"name", graph.name},
        {"num_nodes", graph.num_nodes},
        {"num_features", graph.num_features()},
        {"num_classes", graph.num_classes},
        {"num_edges", graph.edges.size()},
        {"raw_link_count", graph.raw_link_count},
        {"content_hash", io::hex64(graph_content_hash(graph))}}},
      {"class_names", graph.class_names},
      {"features", io::pack_sparse(graph.features)},
      {"edges", io::pack_ints(flat_edges)},
      {"labels", io::pack_ints(labels)},
  };
  io::write_container(path, doc);
}

Graph load_graph_cache(const fs::path& path) {
  const io::json doc = io::read_container(path, "graph");
  const auto& m = doc.at("manifest");
  Graph g;
  g.name = m.at("name").get<std::string>();
  g.num_nodes = m.at("num_nodes").get<NodeId>();
  g.num_classes = m.at("num_classes").get<int>();
  g.raw_link_count = m.at("raw_link_count").get<std::size_t>();
  g.class_names = doc.at("class_names").get<std::vector<std::string>>();
  g.features = io::unpack_sparse(doc.at("features"));
  const auto flat = io::unpack_ints(doc.at("edges"));
  if (flat.size() % 2 != 0) throw IntegrityError(fmt::format("{}: ragged edge blob", path.string()));
  for (std::size_t i = 0; i < flat.size(); i += 2) {
    g.edges.push_back({static_cast<NodeId>(flat[i]), static_cast<NodeId>(flat[i + 1])});
  }
  for (auto l : io::unpack_ints(doc.at("labels"))) g.labels.push_back(static_cast<int>(l));
  g.validate();
  if (g.num_features() != m.at("num_features").get<Index>()) {
    throw IntegrityError(fmt::format("{}: manifest feature count mismatch", path.string()));
  }
  if (io::hex64(graph_content_hash(g)) != m.at("content_hash").get<std::string>()) {
    throw IntegrityError(fmt::format("{}: content hash mismatch", path.string()));
  }
  return g;
}

std::string_view to_string(FeatureScaling scaling) {
  return scaling == FeatureScaling::row ? "row" : "raw";
}

FeatureScaling parse_feature_scaling(std::string_view text) {
  if (text == "raw") return FeatureScaling::raw;
  if (text == "row") return FeatureScaling::row;
  throw ValidationError(fmt::format("unknown feature scaling '{}'", text));
}

fs::path dataset_cache_path(const fs::path& data_dir, std::string_view dataset_name,
                            FeatureScaling scaling) {
  return data_dir / "cache" / fmt::format("{}.{}.bvgc", dataset_name, to_string(scaling));
}

Graph load_dataset(const fs::path& data_dir, std::string_view dataset_name,
                   FeatureScaling scaling) {
  const fs::path cache = dataset_cache_path(data_dir, dataset_name, scaling);
  if (fs::exists(cache)) return load_graph_cache(cache);
  Graph g = load_planetoid(data_dir / "raw", dataset_name);
  if (scaling == FeatureScaling::row) g = normalize_features(std::move(g));
  save_graph_cache(g, cache);
  return g;
}

std::optional<DatasetStats> published_stats(std::string_view dataset_name) {
  static const std::map<std::string, DatasetStats, std::less<>> kStats = {
      {"cora", {2708, 5429, 1433, 7}},
      {"cora_ml", {2810, 7981, 2879, 7}},
      {"pubmed", {19717, 44325, 500, 3}},
  };
  const auto it = kStats.find(dataset_name);
  if (it == kStats.end()) return std::nullopt;
  return it->second;
}

}  // namespace bvg
