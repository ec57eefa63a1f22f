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

#include "baed/experiment.hpp"

#include "baed/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace baed {

namespace {

using ojson = nlohmann::ordered_json;

ojson build_defaults() {
  ojson v;
  v["graph.n_normal"] = 540;
  v["graph.n_clusters"] = 12;
  v["graph.cluster_size"] = 5;
  v["graph.bg_edge_prob"] = 0.01;
  v["graph.feature_dim"] = 16;
  v["graph.anomaly_feature_shift"] = 1.0;
  v["split.train"] = 0.7;
  v["split.val"] = 0.15;
  v["split.test"] = 0.15;
  v["ego.hops"] = 2;
  v["ego.max_nodes"] = 32;
  v["diffusion.T"] = 128;
  v["diffusion.beta_start"] = 1e-4;
  v["diffusion.beta_end"] = 0.2;
  v["diffusion.p"] = 0.0;
  v["diffusion.model_dim"] = 64;
  v["diffusion.heads"] = 8;
  v["diffusion.blocks"] = 2;
  v["diffusion.ff_dim"] = 128;
  v["diffusion.dropout"] = 0.1;
  v["diffusion.epochs"] = 300;
  v["diffusion.batch_size"] = 8;
  v["diffusion.lr"] = 1e-4;
  v["gin.layers"] = 2;
  v["gin.dim"] = 64;
  v["gin.eps"] = 0.0;
  v["gin.readout"] = "mean";
  v["detector.layers"] = 2;
  v["detector.hidden"] = 64;
  v["detector.aggregation"] = "mean";
  v["train.mode"] = "baed";
  v["train.epochs"] = 50;
  v["train.batch_size"] = 32;
  v["train.lr"] = 1e-3;
  v["train.f1_threshold"] = 0.5;
  v["curriculum.alpha"] = 5.0;
  v["curriculum.beta_shift"] = "auto";
  v["curriculum.ema_decay"] = 0.9;
  v["experiment.seeds"] = {15, 42, 63, 87, 94};
  v["experiment.modes"] = {"none", "random-duplicate", "unconditional", "baed"};
  return v;
}

const ojson& default_values() {
  static const ojson defaults = build_defaults();
  return defaults;
}

// Keys that take either a number or the string "auto".
bool number_or_auto(const std::string& key) { return key == "curriculum.beta_shift"; }

bool same_kind(const ojson& def, const ojson& v) {
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) {
    if (!v.is_array() || v.empty()) return false;
    const bool want_int = def.front().is_number_integer();
    return std::all_of(v.begin(), v.end(), [&](const ojson& e) {
      return want_int ? e.is_number_unsigned() : e.is_string();
    });
  }
  return false;
}

std::string kind_name(const ojson& def) {
  if (def.is_number_integer()) return "an integer";
  if (def.is_number()) return "a number";
  if (def.is_string()) return "a string";
  return def.front().is_number_integer() ? "a list of non-negative integers" : "a list of strings";
}

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::kParse, "key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

Aggregation parse_aggregation(const std::string& s) {
  if (s == "mean") return Aggregation::kMean;
  if (s == "concat") return Aggregation::kConcat;
  throw Error(ErrorCode::kInvalidArgument, "detector.aggregation must be mean or concat");
}

std::string aggregation_name(Aggregation a) { return a == Aggregation::kMean ? "mean" : "concat"; }

GinReadout parse_readout(const std::string& s) {
  if (s == "mean") return GinReadout::kMean;
  if (s == "sum") return GinReadout::kSum;
  throw Error(ErrorCode::kInvalidArgument, "gin.readout must be mean or sum");
}

std::string readout_name(GinReadout r) { return r == GinReadout::kMean ? "mean" : "sum"; }

ojson parse_json_file(const std::filesystem::path& path) {
  try {
    return ojson::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

const ojson& field(const ojson& j, const char* key, const std::string& origin) {
  if (!j.contains(key)) throw Error(ErrorCode::kParse, origin + ": missing field '" + key + "'");
  return j.at(key);
}

// Replaces a freshly initialised store with a checkpoint of identical layout.
void adopt_checkpoint(ParamStore& fresh, const std::filesystem::path& dir) {
  ParamStore loaded = load_checkpoint(dir);
  if (loaded.size() != fresh.size()) {
    throw Error(ErrorCode::kParse, dir.string() + ": checkpoint does not match the model layout");
  }
  for (const auto& [name, p] : fresh) {
    if (!loaded.contains(name) || loaded.at(name).value.rows() != p.value.rows() ||
        loaded.at(name).value.cols() != p.value.cols()) {
      throw Error(ErrorCode::kParse, dir.string() + ": parameter '" + name + "' missing or reshaped");
    }
  }
  fresh = std::move(loaded);
}

}  // namespace

// --- configuration ---------------------------------------------------------------

ExperimentConfig::ExperimentConfig() : values_(default_values()) {}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  ExperimentConfig cfg;
  cfg.merge(parse_json_file(path), path.string());
  return cfg;
}

void ExperimentConfig::merge(const nlohmann::json& flat, const std::string& origin) {
  if (!flat.is_object()) throw Error(ErrorCode::kParse, origin + ": config must be a JSON object");
  for (const auto& [key, value] : flat.items()) {
    if (!values_.contains(key)) {
      throw Error(ErrorCode::kInvalidArgument, origin + ": unknown key '" + key + "'");
    }
    const auto& def = default_values().at(key);
    const bool ok = number_or_auto(key) ? (value.is_number() || value == "auto") : same_kind(def, value);
    if (!ok) {
      throw Error(ErrorCode::kInvalidArgument,
                  origin + ": key '" + key + "' expects " +
                      (number_or_auto(key) ? std::string("a number or \"auto\"") : kind_name(def)));
    }
    values_[key] = value;
  }
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!values_.contains(key)) throw Error(ErrorCode::kInvalidArgument, "unknown key '" + key + "'");
  const auto& def = default_values().at(key);
  nlohmann::json parsed;
  if (number_or_auto(key)) {
    parsed = value == "auto" ? nlohmann::json("auto") : nlohmann::json(parse_number<double>(key, value));
  } else if (def.is_number_integer()) {
    parsed = parse_number<std::int64_t>(key, value);
  } else if (def.is_number()) {
    parsed = parse_number<double>(key, value);
  } else if (def.is_string()) {
    parsed = value;
  } else {
    parsed = nlohmann::json::array();
    for (const auto& item : split_list(value)) {
      if (def.front().is_number_integer()) {
        parsed.push_back(parse_number<std::uint64_t>(key, item));
      } else {
        parsed.push_back(item);
      }
    }
  }
  nlohmann::json one;
  one[key] = parsed;
  merge(one, "override");
}

const nlohmann::ordered_json& ExperimentConfig::at(const std::string& key) const {
  if (!values_.contains(key)) throw Error(ErrorCode::kInvalidArgument, "unknown key '" + key + "'");
  return values_.at(key);
}

int ExperimentConfig::get_int(const std::string& key) const { return at(key).get<int>(); }

double ExperimentConfig::get_double(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_number()) throw Error(ErrorCode::kInvalidArgument, "key '" + key + "' is not numeric");
  return v.get<double>();
}

std::string ExperimentConfig::get_string(const std::string& key) const {
  const auto& v = at(key);
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::vector<std::uint64_t> ExperimentConfig::get_seeds(const std::string& key) const {
  return at(key).get<std::vector<std::uint64_t>>();
}

std::string ExperimentConfig::dump() const { return values_.dump(); }

std::string ExperimentConfig::digest() const { return hex64(fnv1a64(dump())); }

BenchmarkConfig benchmark_config(const ExperimentConfig& cfg) {
  BenchmarkConfig b;
  b.n_normal = cfg.get_int("graph.n_normal");
  b.n_clusters = cfg.get_int("graph.n_clusters");
  b.cluster_size = cfg.get_int("graph.cluster_size");
  b.bg_edge_prob = cfg.get_double("graph.bg_edge_prob");
  b.feature_dim = cfg.get_int("graph.feature_dim");
  b.anomaly_feature_shift = cfg.get_double("graph.anomaly_feature_shift");
  return b;
}

std::array<double, 3> split_ratios(const ExperimentConfig& cfg) {
  return {cfg.get_double("split.train"), cfg.get_double("split.val"), cfg.get_double("split.test")};
}

NoiseSchedule noise_schedule(const ExperimentConfig& cfg) {
  return make_linear_schedule(cfg.get_int("diffusion.T"), cfg.get_double("diffusion.beta_start"),
                              cfg.get_double("diffusion.beta_end"), cfg.get_double("diffusion.p"));
}

DenoiserConfig denoiser_config(const ExperimentConfig& cfg) {
  DenoiserConfig d;
  d.model_dim = cfg.get_int("diffusion.model_dim");
  d.heads = cfg.get_int("diffusion.heads");
  d.blocks = cfg.get_int("diffusion.blocks");
  d.ff_dim = cfg.get_int("diffusion.ff_dim");
  d.dropout = cfg.get_double("diffusion.dropout");
  d.n_max = cfg.get_int("ego.max_nodes");
  d.guidance_dim = cfg.get_int("gin.dim");
  return d;
}

GinConfig gin_config(const ExperimentConfig& cfg) {
  GinConfig g;
  g.layers = cfg.get_int("gin.layers");
  g.dim = cfg.get_int("gin.dim");
  g.eps = cfg.get_double("gin.eps");
  g.readout = parse_readout(cfg.get_string("gin.readout"));
  return g;
}

DetectorConfig detector_config(const ExperimentConfig& cfg) {
  DetectorConfig d;
  d.layers = cfg.get_int("detector.layers");
  d.hidden = cfg.get_int("detector.hidden");
  d.aggregation = parse_aggregation(cfg.get_string("detector.aggregation"));
  return d;
}

DiffusionTrainConfig diffusion_train_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  DiffusionTrainConfig d;
  d.epochs = cfg.get_int("diffusion.epochs");
  d.batch_size = cfg.get_int("diffusion.batch_size");
  d.lr = cfg.get_double("diffusion.lr");
  d.seed = seed;
  return d;
}

TrainConfig train_config(const ExperimentConfig& cfg, std::uint64_t seed, AugmentMode mode) {
  TrainConfig t;
  t.epochs = cfg.get_int("train.epochs");
  t.batch_size = cfg.get_int("train.batch_size");
  t.lr = cfg.get_double("train.lr");
  t.seed = seed;
  t.mode = mode;
  t.hops = cfg.get_int("ego.hops");
  const int max_nodes = cfg.get_int("ego.max_nodes");
  if (max_nodes < 1) throw Error(ErrorCode::kInvalidArgument, "ego.max_nodes must be >= 1");
  t.max_nodes = static_cast<std::size_t>(max_nodes);
  t.detector = detector_config(cfg);
  t.curriculum_alpha = cfg.get_double("curriculum.alpha");
  if (cfg.values().at("curriculum.beta_shift").is_number()) {
    t.beta_shift = cfg.get_double("curriculum.beta_shift");
  }
  t.ema_decay = cfg.get_double("curriculum.ema_decay");
  t.f1_threshold = cfg.get_double("train.f1_threshold");
  return t;
}

// --- pipeline ------------------------------------------------------------------------

std::vector<EgoGraph> training_anomaly_egos(const AttributedGraph& g, const DatasetSplit& split,
                                            const ExperimentConfig& cfg, std::uint64_t seed) {
  std::vector<NodeId> ids;
  for (NodeId v : split.train)
    if (g.label(v) == Label::kAnomalous) ids.push_back(v);
  if (ids.empty()) throw Error(ErrorCode::kInvalidArgument, "train split has no anomalies");
  const auto tc = train_config(cfg, seed, AugmentMode::kNone);
  return extract_egos(g, ids, tc.hops, tc.max_nodes, seed);
}

Generator train_generator(const AttributedGraph& g, const DatasetSplit& split,
                          const ExperimentConfig& cfg, std::uint64_t seed,
                          std::vector<double>* losses) {
  const auto egos = training_anomaly_egos(g, split, cfg, seed);
  Rng rng(seed, "generator-init", 0);
  Generator gen;
  gen.schedule = noise_schedule(cfg);
  gen.denoiser = make_denoiser(denoiser_config(cfg), gen.schedule.T, rng);
  gen.gin = make_gin(g.feature_dim(), gin_config(cfg), rng);
  auto history = train_diffusion(gen.denoiser, gen.gin, egos, gen.schedule,
                                 diffusion_train_config(cfg, seed));
  if (losses) *losses = std::move(history);
  return gen;
}

EvalReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                           double threshold, std::uint64_t seed) {
  EvalReport r;
  r.auroc = auroc(scores, labels);
  r.auprc = auprc(scores, labels);
  r.f1 = f1_score(scores, labels, threshold);
  r.threshold = threshold;
  for (int y : labels) (y ? r.n_pos : r.n_neg)++;
  r.seed = seed;
  return r;
}

NodeScores score_nodes(const DetectorParams& params, const AttributedGraph& g,
                       std::span<const NodeId> ids, int hops, std::size_t max_nodes,
                       std::uint64_t seed) {
  NodeScores out;
  for (NodeId v : ids) {
    const Label l = g.label(v);
    if (l == Label::kUnknown) continue;
    const auto ego = extract_ego_graph(g, v, hops, max_nodes, seed);
    out.ids.push_back(v);
    out.scores.push_back(score_ego(params, ego));
    out.labels.push_back(l == Label::kAnomalous ? 1 : 0);
  }
  return out;
}

std::vector<ModeRun> compare_modes(const ExperimentConfig& cfg, std::span<const AugmentMode> modes,
                                   std::span<const std::uint64_t> seeds) {
  if (modes.empty() || seeds.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "compare-modes needs at least one mode and one seed");
  }
  const bool needs_generator = std::any_of(modes.begin(), modes.end(), [](AugmentMode m) {
    return m == AugmentMode::kBaed || m == AugmentMode::kUnconditional;
  });
  std::vector<ModeRun> runs;
  for (std::uint64_t seed : seeds) {
    const auto g = synthesize_benchmark(benchmark_config(cfg), seed);
    const auto split = split_dataset(g, split_ratios(cfg), seed);
    Generator gen;
    if (needs_generator) gen = train_generator(g, split, cfg, seed);
    for (AugmentMode mode : modes) {
      const auto tc = train_config(cfg, seed, mode);
      const bool uses_gen = mode == AugmentMode::kBaed || mode == AugmentMode::kUnconditional;
      const auto result = train_detector(g, split, tc, uses_gen ? &gen : nullptr);
      const auto s = score_nodes(result.detector, g, split.test, tc.hops, tc.max_nodes, seed);
      runs.push_back({mode, seed, evaluate_scores(s.scores, s.labels, tc.f1_threshold, seed)});
    }
  }
  std::stable_sort(runs.begin(), runs.end(), [&](const ModeRun& a, const ModeRun& b) {
    const auto ia = std::find(modes.begin(), modes.end(), a.mode) - modes.begin();
    const auto ib = std::find(modes.begin(), modes.end(), b.mode) - modes.begin();
    return ia < ib;
  });
  return runs;
}

// --- serialization ---------------------------------------------------------------------

namespace {

ojson report_object(const EvalReport& r) {
  ojson j;
  j["auroc"] = r.auroc;
  j["auprc"] = r.auprc;
  j["f1"] = r.f1;
  j["threshold"] = r.threshold;
  j["n_pos"] = r.n_pos;
  j["n_neg"] = r.n_neg;
  j["seed"] = r.seed;
  return j;
}

struct ModeMean {
  AugmentMode mode;
  double auroc = 0.0, auprc = 0.0, f1 = 0.0;
  std::size_t count = 0;
};

std::vector<ModeMean> mode_means(std::span<const ModeRun> runs) {
  std::vector<ModeMean> means;
  for (const auto& r : runs) {
    auto it = std::find_if(means.begin(), means.end(), [&](const ModeMean& m) { return m.mode == r.mode; });
    if (it == means.end()) {
      means.push_back({r.mode});
      it = means.end() - 1;
    }
    it->auroc += r.report.auroc;
    it->auprc += r.report.auprc;
    it->f1 += r.report.f1;
    ++it->count;
  }
  for (auto& m : means) {
    const auto n = static_cast<double>(m.count);
    m.auroc /= n;
    m.auprc /= n;
    m.f1 /= n;
  }
  return means;
}

}  // namespace

std::string report_json(const EvalReport& r, const std::string& digest) {
  ojson j = report_object(r);
  j["config_digest"] = digest;
  return j.dump(2) + "\n";
}

std::string comparison_csv(std::span<const ModeRun> runs, const std::string& digest) {
  std::string out = "# config_digest=" + digest + "\nmode,seed,auroc,auprc,f1\n";
  const auto means = mode_means(runs);
  for (const auto& m : means) {
    for (const auto& r : runs) {
      if (r.mode != m.mode) continue;
      out += std::string(mode_name(r.mode)) + "," + std::to_string(r.seed) + "," + fmt(r.report.auroc) +
             "," + fmt(r.report.auprc) + "," + fmt(r.report.f1) + "\n";
    }
    out += std::string(mode_name(m.mode)) + ",mean," + fmt(m.auroc) + "," + fmt(m.auprc) + "," +
           fmt(m.f1) + "\n";
  }
  return out;
}

std::string comparison_json(std::span<const ModeRun> runs, const std::string& digest) {
  ojson j;
  j["config_digest"] = digest;
  ojson rows = ojson::array();
  for (const auto& r : runs) {
    ojson row = report_object(r.report);
    row["mode"] = mode_name(r.mode);
    rows.push_back(row);
  }
  j["runs"] = rows;
  ojson means = ojson::array();
  for (const auto& m : mode_means(runs)) {
    means.push_back({{"mode", mode_name(m.mode)}, {"seeds", m.count}, {"auroc", m.auroc},
                     {"auprc", m.auprc}, {"f1", m.f1}});
  }
  j["means"] = means;
  return j.dump(2) + "\n";
}

std::string scores_csv(const NodeScores& s, const std::string& digest, std::uint64_t seed) {
  std::string out = "# config_digest=" + digest + " seed=" + std::to_string(seed) + "\nnode_id,score,label\n";
  for (std::size_t i = 0; i < s.ids.size(); ++i) {
    out += std::to_string(s.ids[i]) + "," + fmt(s.scores[i]) + "," + std::to_string(s.labels[i]) + "\n";
  }
  return out;
}

NodeScores parse_scores_csv(const std::string& text) {
  NodeScores out;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen && line.rfind("node_id", 0) == 0) {
      header_seen = true;
      continue;
    }
    const auto parts = split_list(line);
    if (parts.size() != 3) {
      throw Error(ErrorCode::kParse, "scores line " + std::to_string(line_no) + ": expected node_id,score,label");
    }
    const std::string where = "scores line " + std::to_string(line_no);
    out.ids.push_back(parse_number<NodeId>(where, parts[0]));
    out.scores.push_back(parse_number<double>(where, parts[1]));
    const int label = parse_number<int>(where, parts[2]);
    if (label != 0 && label != 1) throw Error(ErrorCode::kParse, where + ": label must be 0 or 1");
    out.labels.push_back(label);
  }
  if (out.ids.empty()) throw Error(ErrorCode::kParse, "scores file holds no rows");
  return out;
}

std::string split_json(const DatasetSplit& split, const std::string& digest, std::uint64_t seed) {
  ojson j;
  j["config_digest"] = digest;
  j["seed"] = seed;
  j["train"] = split.train;
  j["val"] = split.val;
  j["test"] = split.test;
  return j.dump() + "\n";
}

DatasetSplit parse_split_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("split file: ") + e.what());
  }
  DatasetSplit s;
  try {
    s.train = field(j, "train", "split file").get<std::vector<NodeId>>();
    s.val = field(j, "val", "split file").get<std::vector<NodeId>>();
    s.test = field(j, "test", "split file").get<std::vector<NodeId>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("split file: ") + e.what());
  }
  return s;
}

void save_generator(const Generator& gen, const std::filesystem::path& dir,
                    const std::string& digest, std::uint64_t seed,
                    std::span<const double> losses) {
  save_checkpoint(gen.denoiser.store, dir / "denoiser");
  save_checkpoint(gen.gin.store, dir / "gin");
  const auto& d = gen.denoiser.config;
  const auto& g = gen.gin.config;
  ojson j;
  j["config_digest"] = digest;
  j["seed"] = seed;
  j["input_dim"] = gen.gin.input_dim;
  j["schedule"] = {{"T", gen.schedule.T},
                   {"p", gen.schedule.p},
                   {"beta", std::vector<double>(gen.schedule.beta.begin() + 1, gen.schedule.beta.end())}};
  j["denoiser"] = {{"model_dim", d.model_dim}, {"heads", d.heads},   {"blocks", d.blocks},
                   {"ff_dim", d.ff_dim},       {"dropout", d.dropout}, {"n_max", d.n_max},
                   {"guidance_dim", d.guidance_dim}};
  j["gin"] = {{"layers", g.layers}, {"dim", g.dim}, {"eps", g.eps}, {"readout", readout_name(g.readout)}};
  j["losses"] = std::vector<double>(losses.begin(), losses.end());
  write_file_atomic(dir / "generator.json", j.dump(2) + "\n");
}

Generator load_generator(const std::filesystem::path& dir) {
  const auto path = dir / "generator.json";
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kState, "no diffusion checkpoint at " + dir.string() + " (run train-diffusion first)");
  }
  const ojson j = parse_json_file(path);
  const std::string origin = path.string();
  try {
    Generator gen;
    const auto& s = field(j, "schedule", origin);
    gen.schedule = make_schedule(s.at("beta").get<std::vector<double>>(), s.at("p").get<double>());
    const auto& d = field(j, "denoiser", origin);
    DenoiserConfig dc;
    dc.model_dim = d.at("model_dim");
    dc.heads = d.at("heads");
    dc.blocks = d.at("blocks");
    dc.ff_dim = d.at("ff_dim");
    dc.dropout = d.at("dropout");
    dc.n_max = d.at("n_max");
    dc.guidance_dim = d.at("guidance_dim");
    const auto& g = field(j, "gin", origin);
    GinConfig gc;
    gc.layers = g.at("layers");
    gc.dim = g.at("dim");
    gc.eps = g.at("eps");
    gc.readout = parse_readout(g.at("readout").get<std::string>());
    Rng rng(0);
    gen.denoiser = make_denoiser(dc, gen.schedule.T, rng);
    gen.gin = make_gin(field(j, "input_dim", origin).get<Eigen::Index>(), gc, rng);
    adopt_checkpoint(gen.denoiser.store, dir / "denoiser");
    adopt_checkpoint(gen.gin.store, dir / "gin");
    return gen;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, origin + ": " + e.what());
  }
}

void save_detector(const DetectorParams& det, const std::filesystem::path& dir,
                   const std::string& digest, std::uint64_t seed, int hops,
                   std::size_t max_nodes, AugmentMode mode, int best_epoch) {
  save_checkpoint(det.store, dir / "params");
  ojson j;
  j["config_digest"] = digest;
  j["seed"] = seed;
  j["mode"] = mode_name(mode);
  j["best_epoch"] = best_epoch;
  j["input_dim"] = det.input_dim;
  j["layers"] = det.config.layers;
  j["hidden"] = det.config.hidden;
  j["aggregation"] = aggregation_name(det.config.aggregation);
  j["prob_clamp"] = det.config.prob_clamp;
  j["hops"] = hops;
  j["max_nodes"] = max_nodes;
  write_file_atomic(dir / "detector.json", j.dump(2) + "\n");
}

LoadedDetector load_detector(const std::filesystem::path& dir) {
  const auto path = dir / "detector.json";
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kState, "no detector checkpoint at " + dir.string() + " (run train-detector first)");
  }
  const ojson j = parse_json_file(path);
  const std::string origin = path.string();
  try {
    DetectorConfig dc;
    dc.layers = field(j, "layers", origin);
    dc.hidden = field(j, "hidden", origin);
    dc.aggregation = parse_aggregation(field(j, "aggregation", origin).get<std::string>());
    dc.prob_clamp = field(j, "prob_clamp", origin);
    Rng rng(0);
    LoadedDetector out;
    out.params = make_detector(field(j, "input_dim", origin).get<Eigen::Index>(), dc, rng);
    adopt_checkpoint(out.params.store, dir / "params");
    out.hops = field(j, "hops", origin);
    out.max_nodes = field(j, "max_nodes", origin);
    out.seed = field(j, "seed", origin);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, origin + ": " + e.what());
  }
}

}  // namespace baed
