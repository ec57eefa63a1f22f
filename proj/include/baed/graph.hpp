// Copyright 2026 The BAED Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BAED_GRAPH_HPP_
#define BAED_GRAPH_HPP_

#include "baed/numeric.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

namespace baed {

using NodeId = std::int64_t;

// Label 1 is anomalous throughout, 0 normal.
enum class Label : std::int8_t { kNormal = 0, kAnomalous = 1, kUnknown = -1 };

// Undirected, unweighted graph with node features and partial labels.
// Adjacency is held as sorted neighbour lists; there are no self-loops.
class AttributedGraph {
 public:
  AttributedGraph() = default;
  // Builds from an edge list; duplicates collapse and self-loops drop.
  AttributedGraph(NodeId n_nodes,
                  const std::vector<std::pair<NodeId, NodeId>>& edges,
                  Matrix features, std::vector<Label> labels);

  NodeId n_nodes() const { return static_cast<NodeId>(neighbors_.size()); }
  Eigen::Index feature_dim() const { return features_.cols(); }
  std::size_t n_edges() const { return n_edges_; }
  const std::vector<NodeId>& neighbors(NodeId v) const {
    return neighbors_[static_cast<std::size_t>(v)];
  }
  bool has_edge(NodeId u, NodeId v) const;
  const Matrix& features() const { return features_; }
  const std::vector<Label>& labels() const { return labels_; }
  Label label(NodeId v) const { return labels_[static_cast<std::size_t>(v)]; }

  std::size_t count_label(Label l) const;
  // Canonical edge list: i < j, lexicographic.
  std::vector<std::pair<NodeId, NodeId>> edge_list() const;

  std::size_t self_loops_dropped() const { return self_loops_dropped_; }
  std::size_t duplicates_collapsed() const { return duplicates_collapsed_; }

 private:
  std::vector<std::vector<NodeId>> neighbors_;
  Matrix features_;
  std::vector<Label> labels_;
  std::size_t n_edges_ = 0;
  std::size_t self_loops_dropped_ = 0;
  std::size_t duplicates_collapsed_ = 0;
};

// K-hop induced subgraph around a centre that sits at local index 0.
// node_ids maps local to global ids; it is empty for generated egos.
struct EgoGraph {
  std::vector<NodeId> node_ids;
  Matrix adjacency;
  Matrix features;
  int hops = 0;
  Label label = Label::kUnknown;

  Eigen::Index size() const { return adjacency.rows(); }
  bool synthetic() const { return node_ids.empty(); }
  std::size_t edge_count() const {
    return static_cast<std::size_t>(adjacency.sum() / 2.0);
  }
};

struct DatasetSplit {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
};

AttributedGraph load_graph(const std::filesystem::path& edge_path,
                           const std::filesystem::path& feature_path,
                           const std::filesystem::path& label_path);

// Writes edges.txt, features.csv, labels.csv and manifest.json under dir.
// Extra manifest fields are merged in (config digest, seed).
void save_graph(const AttributedGraph& g, const std::filesystem::path& dir,
                const std::vector<std::pair<std::string, std::string>>&
                    extra_manifest = {});
AttributedGraph load_graph_dir(const std::filesystem::path& dir);

inline constexpr std::size_t kUnboundedEgo =
    std::numeric_limits<std::size_t>::max();

// Breadth-first K-hop ego-graph. When the ball holds more than max_nodes
// nodes, each hop is subsampled uniformly among the frontier reachable from
// the nodes kept at the previous hop, nearest hops first. The sample stream
// is derived from (seed, v) so extraction order never matters.
EgoGraph extract_ego_graph(const AttributedGraph& g, NodeId v, int hops,
                           std::size_t max_nodes, std::uint64_t seed);

struct BenchmarkConfig {
  NodeId n_normal = 540;
  NodeId n_clusters = 12;
  NodeId cluster_size = 5;
  double bg_edge_prob = 0.01;
  Eigen::Index feature_dim = 16;
  double anomaly_feature_shift = 1.0;
};

// Normal nodes get N(0, I) features; anomalies are planted cliques whose
// features are shifted along one random unit direction. Background edges
// are Bernoulli(bg_edge_prob) over all pairs. Node ids are shuffled so the
// anomalies are not contiguous.
AttributedGraph synthesize_benchmark(const BenchmarkConfig& cfg,
                                     std::uint64_t seed);

// Stratified split over labelled nodes. Overall sizes follow the ratios
// by rounding; each class is distributed so every split holds at least
// one anomaly.
DatasetSplit split_dataset(const AttributedGraph& g,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed);

}  // namespace baed

#endif  // BAED_GRAPH_HPP_
