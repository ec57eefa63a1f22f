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

#include "baed/graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

namespace baed {

AttributedGraph::AttributedGraph(
    NodeId n_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges,
    Matrix features, std::vector<Label> labels)
    : neighbors_(static_cast<std::size_t>(n_nodes)),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  if (features_.rows() != n_nodes) {
    throw Error(ErrorCode::kShapeMismatch,
                "feature row count " + std::to_string(features_.rows()) +
                    " != node count " + std::to_string(n_nodes));
  }
  if (static_cast<NodeId>(labels_.size()) != n_nodes) {
    throw Error(ErrorCode::kShapeMismatch, "label count != node count");
  }
  if (!features_.allFinite()) {
    throw Error(ErrorCode::kNumeric, "non-finite feature value");
  }
  std::size_t raw = 0;
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n_nodes || v >= n_nodes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge endpoint out of range: " + std::to_string(u) + " " +
                      std::to_string(v));
    }
    if (u == v) {
      ++self_loops_dropped_;
      continue;
    }
    ++raw;
    neighbors_[static_cast<std::size_t>(u)].push_back(v);
    neighbors_[static_cast<std::size_t>(v)].push_back(u);
  }
  std::size_t degree_sum = 0;
  for (auto& nb : neighbors_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    degree_sum += nb.size();
  }
  n_edges_ = degree_sum / 2;
  duplicates_collapsed_ = raw - n_edges_;
}

bool AttributedGraph::has_edge(NodeId u, NodeId v) const {
  const auto& nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::size_t AttributedGraph::count_label(Label l) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), l));
}

std::vector<std::pair<NodeId, NodeId>> AttributedGraph::edge_list() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(n_edges_);
  for (NodeId u = 0; u < n_nodes(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

// --- text formats ----------------------------------------------------------

namespace {

struct LineReader {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line_no = 0;

  bool next(std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  }
};

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  if (hash != std::string_view::npos) line = line.substr(0, hash);
  while (!line.empty() && (line.back() == ' ' || line.back() == '\t'))
    line.remove_suffix(1);
  while (!line.empty() && (line.front() == ' ' || line.front() == '\t'))
    line.remove_prefix(1);
  return line;
}

[[noreturn]] void malformed(const std::filesystem::path& path,
                            std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                     ": " + why);
}

template <class T>
bool parse_number(std::string_view tok, T& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_on(std::string_view line, bool whitespace,
                                       char sep) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  if (whitespace) {
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  while (true) {
    std::size_t j = line.find(sep, i);
    std::string_view tok = line.substr(i, j == std::string_view::npos ? line.size() - i : j - i);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    out.push_back(tok);
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string edges_text(const AttributedGraph& g) {
  std::string out;
  for (auto [u, v] : g.edge_list()) {
    out += std::to_string(u);
    out += ' ';
    out += std::to_string(v);
    out += '\n';
  }
  return out;
}

std::string features_text(const AttributedGraph& g) {
  std::string out;
  const Matrix& x = g.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(x(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string labels_text(const AttributedGraph& g) {
  std::string out;
  for (NodeId v = 0; v < g.n_nodes(); ++v) {
    const Label l = g.label(v);
    if (l == Label::kUnknown) continue;
    out += std::to_string(v);
    out += l == Label::kAnomalous ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace

AttributedGraph load_graph(const std::filesystem::path& edge_path,
                           const std::filesystem::path& feature_path,
                           const std::filesystem::path& label_path) {
  // Features first: they fix the node count.
  const std::string ftext = read_file(feature_path);
  std::vector<double> values;
  Eigen::Index d = -1;
  NodeId n = 0;
  {
    LineReader r{ftext};
    std::string_view line;
    while (r.next(line)) {
      line = strip_comment(line);
      if (line.empty()) continue;
      auto toks = split_on(line, false, ',');
      if (d < 0) d = static_cast<Eigen::Index>(toks.size());
      if (static_cast<Eigen::Index>(toks.size()) != d) {
        malformed(feature_path, r.line_no,
                  "expected " + std::to_string(d) + " columns, found " +
                      std::to_string(toks.size()));
      }
      for (auto tok : toks) {
        double v;
        if (!parse_number(tok, v) || !std::isfinite(v)) {
          malformed(feature_path, r.line_no,
                    "bad feature value '" + std::string(tok) + "'");
        }
        values.push_back(v);
      }
      ++n;
    }
  }
  if (d < 0) d = 0;
  Matrix features(n, d);
  std::copy(values.begin(), values.end(), features.data());

  std::vector<std::pair<NodeId, NodeId>> edges;
  {
    const std::string etext = read_file(edge_path);
    LineReader r{etext};
    std::string_view line;
    while (r.next(line)) {
      line = strip_comment(line);
      if (line.empty()) continue;
      auto toks = split_on(line, true, ' ');
      NodeId u, v;
      if (toks.size() != 2 || !parse_number(toks[0], u) ||
          !parse_number(toks[1], v) || u < 0 || v < 0) {
        malformed(edge_path, r.line_no, "expected two node ids");
      }
      if (u >= n || v >= n) {
        malformed(edge_path, r.line_no,
                  "node id " + std::to_string(std::max(u, v)) +
                      " has no feature row (feature row count " +
                      std::to_string(n) + ")");
      }
      edges.emplace_back(u, v);
    }
  }

  std::vector<Label> labels(static_cast<std::size_t>(n), Label::kUnknown);
  {
    const std::string ltext = read_file(label_path);
    LineReader r{ltext};
    std::string_view line;
    while (r.next(line)) {
      line = strip_comment(line);
      if (line.empty()) continue;
      auto toks = split_on(line, false, ',');
      NodeId id;
      int lab;
      if (toks.size() != 2 || !parse_number(toks[0], id) ||
          !parse_number(toks[1], lab) || (lab != 0 && lab != 1)) {
        malformed(label_path, r.line_no, "expected 'node_id,label' with label 0/1");
      }
      if (id < 0 || id >= n) {
        malformed(label_path, r.line_no,
                  "label id " + std::to_string(id) + " out of range");
      }
      labels[static_cast<std::size_t>(id)] =
          lab == 1 ? Label::kAnomalous : Label::kNormal;
    }
  }
  return AttributedGraph(n, edges, std::move(features), std::move(labels));
}

void save_graph(const AttributedGraph& g, const std::filesystem::path& dir,
                const std::vector<std::pair<std::string, std::string>>&
                    extra_manifest) {
  const std::string e = edges_text(g);
  const std::string f = features_text(g);
  const std::string l = labels_text(g);
  write_file_atomic(dir / "edges.txt", e);
  write_file_atomic(dir / "features.csv", f);
  write_file_atomic(dir / "labels.csv", l);
  std::uint64_t h = fnv1a64(e);
  h = fnv1a64(f, h);
  h = fnv1a64(l, h);
  nlohmann::ordered_json m;
  m["n_nodes"] = g.n_nodes();
  m["d"] = g.feature_dim();
  m["n_edges"] = g.n_edges();
  m["n_labeled"] = g.n_nodes() - static_cast<NodeId>(g.count_label(Label::kUnknown));
  m["n_anomalies"] = g.count_label(Label::kAnomalous);
  m["checksum"] = hex64(h);
  for (const auto& [k, v] : extra_manifest) m[k] = v;
  write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

AttributedGraph load_graph_dir(const std::filesystem::path& dir) {
  AttributedGraph g = load_graph(dir / "edges.txt", dir / "features.csv",
                                 dir / "labels.csv");
  if (std::filesystem::exists(dir / "manifest.json")) {
    const auto m = nlohmann::json::parse(read_file(dir / "manifest.json"));
    std::uint64_t h = fnv1a64(read_file(dir / "edges.txt"));
    h = fnv1a64(read_file(dir / "features.csv"), h);
    h = fnv1a64(read_file(dir / "labels.csv"), h);
    if (m.contains("checksum") && m["checksum"].get<std::string>() != hex64(h)) {
      throw Error(ErrorCode::kParse, "dataset checksum mismatch in " + dir.string());
    }
  }
  return g;
}

// --- ego-graphs ------------------------------------------------------------

EgoGraph extract_ego_graph(const AttributedGraph& g, NodeId v, int hops,
                           std::size_t max_nodes, std::uint64_t seed) {
  if (v < 0 || v >= g.n_nodes()) {
    throw Error(ErrorCode::kInvalidArgument, "ego centre out of range");
  }
  if (hops < 0) throw Error(ErrorCode::kInvalidArgument, "negative hop count");
  if (max_nodes < 1) throw Error(ErrorCode::kInvalidArgument, "max_nodes < 1");

  Rng rng(seed, "ego", static_cast<std::uint64_t>(v));
  std::vector<NodeId> kept{v};
  std::unordered_set<NodeId> seen{v};
  std::vector<NodeId> frontier{v};
  for (int h = 1; h <= hops && kept.size() < max_nodes; ++h) {
    std::vector<NodeId> cand;
    for (NodeId u : frontier) {
      for (NodeId w : g.neighbors(u)) {
        if (seen.insert(w).second) cand.push_back(w);
      }
    }
    if (cand.empty()) break;
    std::sort(cand.begin(), cand.end());
    const std::size_t room = max_nodes - kept.size();
    if (cand.size() > room) {
      // Partial Fisher-Yates: the first `room` slots are a uniform sample.
      for (std::size_t i = 0; i < room; ++i) {
        std::swap(cand[i], cand[i + rng.uniform_index(cand.size() - i)]);
      }
      cand.resize(room);
      std::sort(cand.begin(), cand.end());
    }
    kept.insert(kept.end(), cand.begin(), cand.end());
    frontier = std::move(cand);
  }

  const auto m = static_cast<Eigen::Index>(kept.size());
  std::unordered_map<NodeId, Eigen::Index> local;
  for (Eigen::Index i = 0; i < m; ++i) local[kept[static_cast<std::size_t>(i)]] = i;

  EgoGraph ego;
  ego.node_ids = kept;
  ego.hops = hops;
  ego.label = g.label(v);
  ego.adjacency = Matrix::Zero(m, m);
  ego.features.resize(m, g.feature_dim());
  for (Eigen::Index i = 0; i < m; ++i) {
    const NodeId gi = kept[static_cast<std::size_t>(i)];
    ego.features.row(i) = g.features().row(gi);
    for (NodeId w : g.neighbors(gi)) {
      auto it = local.find(w);
      if (it != local.end()) ego.adjacency(i, it->second) = 1.0;
    }
  }
  return ego;
}

// --- synthetic benchmark ---------------------------------------------------

AttributedGraph synthesize_benchmark(const BenchmarkConfig& cfg,
                                     std::uint64_t seed) {
  if (cfg.cluster_size < 2) {
    throw Error(ErrorCode::kInvalidArgument, "cluster_size must be >= 2");
  }
  if (!(cfg.bg_edge_prob >= 0.0 && cfg.bg_edge_prob <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bg_edge_prob outside [0,1]");
  }
  if (cfg.n_normal < 1 || cfg.n_clusters < 0 || cfg.feature_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad benchmark sizes");
  }
  const NodeId n_anom = cfg.n_clusters * cfg.cluster_size;
  if (n_anom >= cfg.n_normal) {
    throw Error(ErrorCode::kInvalidArgument,
                "benchmark needs fewer anomalies than normal nodes (" +
                    std::to_string(n_anom) + " >= " +
                    std::to_string(cfg.n_normal) + ")");
  }
  const NodeId n = cfg.n_normal + n_anom;
  Rng root(seed, "synth");

  // perm[c] is the node id of construction slot c; slots >= n_normal are
  // anomalies, cluster (c - n_normal) / cluster_size.
  std::vector<NodeId> perm(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  Rng perm_rng = root.stream("permutation");
  perm_rng.shuffle(perm.begin(), perm.end());

  Rng dir_rng = root.stream("direction");
  RowVector direction = sample_gaussian_matrix(dir_rng, 1, cfg.feature_dim, 0, 1);
  direction /= direction.norm();

  Rng feat_rng = root.stream("features");
  Matrix features = sample_gaussian_matrix(feat_rng, n, cfg.feature_dim, 0, 1);
  std::vector<Label> labels(static_cast<std::size_t>(n), Label::kNormal);
  for (NodeId c = cfg.n_normal; c < n; ++c) {
    const NodeId id = perm[static_cast<std::size_t>(c)];
    labels[static_cast<std::size_t>(id)] = Label::kAnomalous;
    features.row(id) += cfg.anomaly_feature_shift * direction;
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  Rng edge_rng = root.stream("background");
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (edge_rng.bernoulli(cfg.bg_edge_prob)) edges.emplace_back(i, j);
    }
  }
  for (NodeId k = 0; k < cfg.n_clusters; ++k) {
    const NodeId base = cfg.n_normal + k * cfg.cluster_size;
    for (NodeId a = 0; a < cfg.cluster_size; ++a) {
      for (NodeId b = a + 1; b < cfg.cluster_size; ++b) {
        edges.emplace_back(perm[static_cast<std::size_t>(base + a)],
                           perm[static_cast<std::size_t>(base + b)]);
      }
    }
  }
  return AttributedGraph(n, edges, std::move(features), std::move(labels));
}

// --- splits ----------------------------------------------------------------

DatasetSplit split_dataset(const AttributedGraph& g,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "split ratios must be positive");
    }
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must sum to 1");
  }
  std::vector<NodeId> anomalous;
  std::vector<NodeId> normal;
  for (NodeId v = 0; v < g.n_nodes(); ++v) {
    if (g.label(v) == Label::kAnomalous) anomalous.push_back(v);
    if (g.label(v) == Label::kNormal) normal.push_back(v);
  }
  if (anomalous.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "stratified split needs at least 3 labelled anomalies, found " +
                    std::to_string(anomalous.size()));
  }
  const auto total = static_cast<long>(anomalous.size() + normal.size());
  const auto n_anom = static_cast<long>(anomalous.size());

  std::array<long, 3> overall{};
  overall[0] = std::lround(ratios[0] * static_cast<double>(total));
  overall[1] = std::lround(ratios[1] * static_cast<double>(total));
  overall[2] = total - overall[0] - overall[1];

  std::array<long, 3> anom{};
  anom[0] = std::lround(ratios[0] * static_cast<double>(n_anom));
  anom[1] = std::lround(ratios[1] * static_cast<double>(n_anom));
  anom[2] = n_anom - anom[0] - anom[1];
  // Every split gets an anomaly; the donor is the split furthest above
  // its proportional share.
  for (std::size_t k = 0; k < 3; ++k) {
    while (anom[k] < 1) {
      std::size_t donor = 3;
      double best = -1e300;
      for (std::size_t j = 0; j < 3; ++j) {
        const double surplus =
            static_cast<double>(anom[j]) - ratios[j] * static_cast<double>(n_anom);
        if (anom[j] > 1 && surplus > best) {
          best = surplus;
          donor = j;
        }
      }
      --anom[donor];
      ++anom[k];
    }
  }
  std::array<long, 3> norm{};
  for (std::size_t k = 0; k < 3; ++k) norm[k] = std::max(0L, overall[k] - anom[k]);
  // Rounding can leave the normal counts off by a few; settle on test.
  norm[2] = static_cast<long>(normal.size()) - norm[0] - norm[1];
  if (norm[2] < 0) {
    throw Error(ErrorCode::kInvalidArgument, "too few normal nodes to split");
  }

  Rng rng(seed, "split");
  Rng ra = rng.stream("anomalous");
  Rng rn = rng.stream("normal");
  ra.shuffle(anomalous.begin(), anomalous.end());
  rn.shuffle(normal.begin(), normal.end());

  DatasetSplit s;
  std::array<std::vector<NodeId>*, 3> parts{&s.train, &s.val, &s.test};
  std::size_t ia = 0;
  std::size_t in = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    for (long i = 0; i < anom[k]; ++i) parts[k]->push_back(anomalous[ia++]);
    for (long i = 0; i < norm[k]; ++i) parts[k]->push_back(normal[in++]);
    std::sort(parts[k]->begin(), parts[k]->end());
  }
  return s;
}

}  // namespace baed
