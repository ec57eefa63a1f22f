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

// Command-line driver for every pipeline stage.

#include "baed/experiment.hpp"
#include "baed/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using baed::Error;
using baed::ErrorCode;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
};

struct Inputs {
  std::string data;
  std::string split;
  std::string model;
  std::string detector;
  std::string scores;
  std::string edges, features, labels;
  std::string mode;
  std::string modes;
  std::size_t count = 100;
  std::size_t instances = 200;
  std::size_t points = 10;
  std::size_t coef_sets = 5;
};

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

baed::ExperimentConfig load_config(const Common& c) {
  auto cfg = c.config_path.empty() ? baed::ExperimentConfig()
                                   : baed::ExperimentConfig::from_file(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "--set expects KEY=VALUE, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::uint64_t resolve_seed(const Common& c, const baed::ExperimentConfig& cfg) {
  return c.seed ? *c.seed : cfg.get_seeds("experiment.seeds").front();
}

// Refuses to replace existing outputs unless --force is given.
void claim_outputs(const Common& c, std::initializer_list<const char*> names) {
  if (c.out.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
  for (const char* n : names) {
    const auto p = fs::path(c.out) / n;
    if (fs::exists(p) && !c.force) {
      throw Error(ErrorCode::kState, p.string() + " exists (pass --force to overwrite)");
    }
  }
  fs::create_directories(c.out);
}

std::string csv_header(const std::string& digest, std::uint64_t seed) {
  return "# config_digest=" + digest + " seed=" + std::to_string(seed) + "\n";
}

baed::AttributedGraph require_data(const Inputs& in) {
  if (in.data.empty()) throw Error(ErrorCode::kInvalidArgument, "--data is required");
  return baed::load_graph_dir(in.data);
}

baed::DatasetSplit resolve_split(const Inputs& in, const baed::AttributedGraph& g,
                                 const baed::ExperimentConfig& cfg, std::uint64_t seed) {
  if (!in.split.empty()) return baed::parse_split_json(baed::read_file(in.split));
  return baed::split_dataset(g, baed::split_ratios(cfg), seed);
}

baed::Generator require_model(const Inputs& in) {
  if (in.model.empty()) throw Error(ErrorCode::kState, "a diffusion model is required (--model DIR)");
  return baed::load_generator(in.model);
}

// Epoch-0 guidance: uniform mean of the training anomalies' embeddings.
baed::RowVector mean_guidance(const baed::Generator& gen, std::span<const baed::EgoGraph> egos) {
  std::vector<baed::RowVector> emb;
  for (const auto& e : egos) emb.push_back(baed::gin_encode(gen.gin, e));
  return baed::aggregate_guidance(emb, std::vector<double>(emb.size(), 1.0));
}

double mean_edges(std::span<const baed::EgoGraph> egos) {
  double total = 0.0;
  for (const auto& e : egos) total += e.adjacency.sum() / 2.0;
  return egos.empty() ? 0.0 : total / static_cast<double>(egos.size());
}

int cmd_synth(const Common& c) {
  const auto cfg = load_config(c);
  const auto seed = resolve_seed(c, cfg);
  claim_outputs(c, {"edges.txt", "features.csv", "labels.csv", "manifest.json"});
  const auto g = baed::synthesize_benchmark(baed::benchmark_config(cfg), seed);
  baed::save_graph(g, c.out, {{"config_digest", cfg.digest()}, {"seed", std::to_string(seed)}});
  std::cout << "synth: " << g.n_nodes() << " nodes, " << g.n_edges() << " edges, "
            << g.count_label(baed::Label::kAnomalous) << " anomalies -> " << c.out << "\n";
  return 0;
}

int cmd_ingest(const Common& c, const Inputs& in) {
  const auto cfg = load_config(c);
  const auto seed = resolve_seed(c, cfg);
  if (in.edges.empty() || in.features.empty() || in.labels.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ingest needs --edges, --features and --labels");
  }
  claim_outputs(c, {"edges.txt", "features.csv", "labels.csv", "manifest.json"});
  const auto g = baed::load_graph(in.edges, in.features, in.labels);
  baed::save_graph(g, c.out, {{"config_digest", cfg.digest()}, {"seed", std::to_string(seed)}});
  std::cout << "ingest: " << g.n_nodes() << " nodes, " << g.n_edges() << " edges, "
            << g.self_loops_dropped() << " self-loops dropped, " << g.duplicates_collapsed()
            << " duplicates collapsed -> " << c.out << "\n";
  return 0;
}

int cmd_split(const Common& c, const Inputs& in) {
  const auto cfg = load_config(c);
  const auto seed = resolve_seed(c, cfg);
  claim_outputs(c, {"split.json"});
  const auto g = require_data(in);
  const auto s = baed::split_dataset(g, baed::split_ratios(cfg), seed);
  baed::write_file_atomic(fs::path(c.out) / "split.json", baed::split_json(s, cfg.digest(), seed));
  std::cout << "split: train " << s.train.size() << ", val " << s.val.size() << ", test "
            << s.test.size() << " -> " << c.out << "\n";
  return 0;
}

int cmd_train_diffusion(const Common& c, const Inputs& in) {
  const auto cfg = load_config(c);
  const auto seed = resolve_seed(c, cfg);
  claim_outputs(c, {"generator.json", "diffusion_loss.csv"});
  const auto g = require_data(in);
  const auto split = resolve_split(in, g, cfg, seed);
  std::vector<double> losses;
  const auto gen = baed::train_generator(g, split, cfg, seed, &losses);
  baed::save_generator(gen, c.out, cfg.digest(), seed, losses);
  std::string csv = csv_header(cfg.digest(), seed) + "epoch,loss\n";
  for (std::size_t e = 0; e < losses.size(); ++e) csv += std::to_string(e) + "," + fmt(losses[e]) + "\n";
  baed::write_file_atomic(fs::path(c.out) / "diffusion_loss.csv", csv);
  std::cout << "train-diffusion: " << losses.size() << " epochs, loss " << fmt(losses.front())
            << " -> " << fmt(losses.back()) << " -> " << c.out << "\n";
  return 0;
}

int cmd_generate(const Common& c, const Inputs& in) {
  const auto cfg = load_config(c);
  const auto seed = resolve_seed(c, cfg);
  claim_outputs(c, {"generated.json"});
  const auto gen = require_model(in);
  const auto g = require_data(in);
  const auto split = resolve_split(in, g, cfg, seed);
  const auto real = baed::training_anomaly_egos(g, split, cfg, seed);
  const auto pools = baed::build_anomaly_pools(real);
  const auto guidance = mean_guidance(gen, pools.egos);
  baed::Rng rng(seed, "cli-generate", 0);
  const auto egos = baed::generate_anomalous_egos(gen, guidance, in.count, pools.sizes, pools.centers,
                                                  pools.neighbors, rng);
  nlohmann::ordered_json out;
  out["config_digest"] = cfg.digest();
  out["seed"] = seed;
  out["egos"] = nlohmann::ordered_json::array();
  for (const auto& e : egos) {
    out["egos"].push_back(nlohmann::ordered_json::parse(baed::generated_ego_json(e, seed, guidance, gen.schedule)));
  }
  baed::write_file_atomic(fs::path(c.out) / "generated.json", out.dump() + "\n");
  std::cout << "generate: " << egos.size() << " egos, mean edges " << fmt(mean_edges(egos))
            << " (real " << fmt(mean_edges(pools.egos)) << ") -> " << c.out << "\n";
  return 0;
}

int cmd_train_detector(const Common& c, const Inputs& in) {
  const auto cfg = load_config(c);
  const auto seed = resolve_seed(c, cfg);
  const auto mode = baed::parse_mode(in.mode.empty() ? cfg.get_string("train.mode") : in.mode);
  claim_outputs(c, {"detector.json", "history.csv"});
  const auto g = require_data(in);
  const auto split = resolve_split(in, g, cfg, seed);
  std::optional<baed::Generator> gen;
  if (mode == baed::AugmentMode::kBaed || mode == baed::AugmentMode::kUnconditional) {
    if (in.model.empty()) {
      throw Error(ErrorCode::kState, "mode " + std::string(baed::mode_name(mode)) +
                                         " requires a pretrained diffusion model (--model DIR)");
    }
    gen = require_model(in);
  }
  const auto tc = baed::train_config(cfg, seed, mode);
  const auto result = baed::train_detector(g, split, tc, gen ? &*gen : nullptr);
  baed::save_detector(result.detector, c.out, cfg.digest(), seed, tc.hops, tc.max_nodes, mode,
                      result.best_epoch);
  baed::write_file_atomic(fs::path(c.out) / "history.csv",
                          csv_header(cfg.digest(), seed) + baed::history_csv(result.history));
  const auto& best = result.history[static_cast<std::size_t>(result.best_epoch)];
  std::cout << "train-detector: mode " << baed::mode_name(mode) << ", best epoch " << result.best_epoch
            << ", val auroc " << fmt(best.val_auroc) << " -> " << c.out << "\n";
  return 0;
}

int cmd_evaluate(const Common& c, const Inputs& in) {
  const auto cfg = load_config(c);
  const double threshold = cfg.get_double("train.f1_threshold");
  if (in.scores.empty() == in.detector.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "evaluate needs exactly one of --detector or --scores");
  }
  baed::NodeScores s;
  std::uint64_t seed = 0;
  if (!in.scores.empty()) {
    seed = resolve_seed(c, cfg);
    s = baed::parse_scores_csv(baed::read_file(in.scores));
    claim_outputs(c, {"metrics.json"});
  } else {
    const auto det = baed::load_detector(in.detector);
    seed = c.seed ? *c.seed : det.seed;
    claim_outputs(c, {"metrics.json", "scores.csv"});
    const auto g = require_data(in);
    const auto split = resolve_split(in, g, cfg, seed);
    s = baed::score_nodes(det.params, g, split.test, det.hops, det.max_nodes, det.seed);
  }
  const auto report = baed::evaluate_scores(s.scores, s.labels, threshold, seed);
  if (in.scores.empty()) {
    baed::write_file_atomic(fs::path(c.out) / "scores.csv", baed::scores_csv(s, cfg.digest(), seed));
  }
  baed::write_file_atomic(fs::path(c.out) / "metrics.json", baed::report_json(report, cfg.digest()));
  std::cout << "evaluate: auroc " << fmt(report.auroc) << ", auprc " << fmt(report.auprc) << ", f1 "
            << fmt(report.f1) << " (" << report.n_pos << " pos, " << report.n_neg << " neg) -> "
            << c.out << "\n";
  return 0;
}

int cmd_compare_modes(const Common& c, const Inputs& in) {
  auto cfg = load_config(c);
  if (!in.modes.empty()) cfg.set("experiment.modes", in.modes);
  if (c.seed) cfg.set("experiment.seeds", std::to_string(*c.seed));
  std::vector<baed::AugmentMode> modes;
  for (const auto& m : cfg.values().at("experiment.modes")) modes.push_back(baed::parse_mode(m.get<std::string>()));
  const auto seeds = cfg.get_seeds("experiment.seeds");
  claim_outputs(c, {"comparison.csv", "comparison.json"});
  const auto runs = baed::compare_modes(cfg, modes, seeds);
  baed::write_file_atomic(fs::path(c.out) / "comparison.csv", baed::comparison_csv(runs, cfg.digest()));
  baed::write_file_atomic(fs::path(c.out) / "comparison.json", baed::comparison_json(runs, cfg.digest()));
  std::cout << "compare-modes: " << modes.size() << " modes x " << seeds.size() << " seeds ->" ;
  for (auto m : modes) {
    double sum = 0.0;
    for (const auto& r : runs) sum += r.mode == m ? r.report.auroc : 0.0;
    std::cout << " " << baed::mode_name(m) << " auroc " << fmt(sum / static_cast<double>(seeds.size()));
  }
  std::cout << " -> " << c.out << "\n";
  return 0;
}

int cmd_threshold_analyze(const Common& c, const Inputs& in) {
  const auto cfg = load_config(c);
  const auto seed = resolve_seed(c, cfg);
  claim_outputs(c, {"threshold.json"});
  const auto t = baed::verify_threshold_theorem(seed, in.instances, in.points, in.coef_sets);
  nlohmann::ordered_json j;
  j["config_digest"] = cfg.digest();
  j["seed"] = seed;
  j["theorem"] = {{"instances", in.instances},
                  {"points", in.points},
                  {"coefficient_sets", in.coef_sets},
                  {"cases", t.cases},
                  {"threshold_rules", t.threshold_rules},
                  {"formula_separations", t.formula_separations},
                  {"mixed_optima", t.mixed_optima},
                  {"passed", t.passed()}};
  if (!in.scores.empty()) {
    const auto text = baed::read_file(in.scores);
    const auto s = baed::parse_scores_csv(text);
    const auto best = baed::best_f1_cut(s.scores, s.labels);
    // For F1 the optimal cut on calibrated probabilities is F1* / 2.
    const double plug_in = best.f1 / 2.0;
    const double configured = cfg.get_double("train.f1_threshold");
    j["scores"] = {{"checksum", baed::hex64(baed::fnv1a64(text))},
                   {"best_cut", best.threshold},
                   {"best_f1", best.f1},
                   {"half_best_f1_cut", plug_in},
                   {"f1_at_half_best_f1_cut", baed::f1_score(s.scores, s.labels, plug_in)},
                   {"configured_cut", configured},
                   {"f1_at_configured_cut", baed::f1_score(s.scores, s.labels, configured)}};
  }
  baed::write_file_atomic(fs::path(c.out) / "threshold.json", j.dump(2) + "\n");
  std::cout << "threshold-analyze: " << t.formula_separations << "/" << t.cases
            << " cases separated by the closed-form threshold, " << t.threshold_rules << "/" << t.cases
            << " threshold rules -> " << c.out << "\n";
  if (!t.passed()) throw Error(ErrorCode::kNumeric, "threshold theorem check failed");
  return 0;
}

int cmd_export_embeddings(const Common& c, const Inputs& in) {
  const auto cfg = load_config(c);
  const auto seed = resolve_seed(c, cfg);
  claim_outputs(c, {"embeddings.csv"});
  const auto gen = require_model(in);
  const auto g = require_data(in);
  const auto tc = baed::train_config(cfg, seed, baed::AugmentMode::kNone);
  std::string csv = csv_header(cfg.digest(), seed) + "node_id,label";
  for (int k = 1; k <= gen.gin.config.dim; ++k) csv += ",g_" + std::to_string(k);
  csv += "\n";
  std::size_t rows = 0;
  for (baed::NodeId v = 0; v < g.n_nodes(); ++v) {
    if (g.label(v) == baed::Label::kUnknown) continue;
    const auto ego = baed::extract_ego_graph(g, v, tc.hops, tc.max_nodes, seed);
    const auto h = baed::gin_encode(gen.gin, ego);
    csv += std::to_string(v) + "," + std::to_string(static_cast<int>(g.label(v)));
    for (Eigen::Index k = 0; k < h.size(); ++k) csv += "," + fmt(h(k));
    csv += "\n";
    ++rows;
  }
  baed::write_file_atomic(fs::path(c.out) / "embeddings.csv", csv);
  std::cout << "export-embeddings: " << rows << " nodes x " << gen.gin.config.dim << " dims -> " << c.out
            << "\n";
  return 0;
}

void print_error(std::string_view code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = {{"code", code}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balanced anomaly-guided ego-graph diffusion for graph anomaly detection"};
  app.require_subcommand(1);
  Common c;
  Inputs in;

  auto add_common = [&](CLI::App* sub, bool writes = true) {
    sub->add_option("--config", c.config_path, "JSON config file with flat keys")->check(CLI::ExistingFile);
    sub->add_option("--set", c.overrides, "Override a config key (KEY=VALUE), repeatable");
    sub->add_option("--seed", c.seed, "Seed (default: first of experiment.seeds)");
    if (writes) {
      sub->add_option("-o,--out", c.out, "Output directory")->required();
      sub->add_flag("--force", c.force, "Overwrite existing outputs");
    }
  };
  auto add_data = [&](CLI::App* sub, bool split = true) {
    sub->add_option("--data", in.data, "Graph directory")->required();
    if (split) sub->add_option("--split", in.split, "split.json (default: derived from the seed)");
  };

  auto* synth = app.add_subcommand("synth", "Synthesize the planted-clique benchmark");
  add_common(synth);
  auto* ingest = app.add_subcommand("ingest", "Import an edge list, feature CSV and label CSV");
  add_common(ingest);
  ingest->add_option("--edges", in.edges, "Edge list, one \"u v\" pair per line")->required()->check(CLI::ExistingFile);
  ingest->add_option("--features", in.features, "Feature CSV, row i holds node i")->required()->check(CLI::ExistingFile);
  ingest->add_option("--labels", in.labels, "Label CSV, node_id,label with 1 = anomalous")->required()->check(CLI::ExistingFile);
  auto* split = app.add_subcommand("split", "Stratified train/val/test split");
  add_common(split);
  add_data(split, false);
  auto* train_diff = app.add_subcommand("train-diffusion", "Train the guided diffusion generator");
  add_common(train_diff);
  add_data(train_diff);
  auto* generate = app.add_subcommand("generate", "Sample anomalous ego-graphs");
  add_common(generate);
  add_data(generate);
  generate->add_option("--model", in.model, "Generator directory")->required();
  generate->add_option("--count", in.count, "Number of ego-graphs")->check(CLI::PositiveNumber);
  auto* train_det = app.add_subcommand("train-detector", "Train the inductive detector");
  add_common(train_det);
  add_data(train_det);
  train_det->add_option("--mode", in.mode, "none | random-duplicate | unconditional | baed");
  train_det->add_option("--model", in.model, "Generator directory");
  auto* evaluate = app.add_subcommand("evaluate", "Score the test split or a scores file");
  add_common(evaluate);
  evaluate->add_option("--data", in.data, "Graph directory");
  evaluate->add_option("--split", in.split, "split.json");
  evaluate->add_option("--detector", in.detector, "Detector directory");
  evaluate->add_option("--scores", in.scores, "CSV node_id,score,label")->check(CLI::ExistingFile);
  auto* compare = app.add_subcommand("compare-modes", "Run augmentation modes over seeds");
  add_common(compare);
  compare->add_option("--modes", in.modes, "Comma-separated modes (default: experiment.modes)");
  auto* threshold = app.add_subcommand("threshold-analyze", "Check the optimal-threshold theorem");
  add_common(threshold);
  threshold->add_option("--instances", in.instances, "Random finite instances (default 200)")->check(CLI::PositiveNumber);
  threshold->add_option("--points", in.points, "Points per instance (default 10)")->check(CLI::Range(1, 12));
  threshold->add_option("--coef-sets", in.coef_sets, "Coefficient sets per instance (default 5)")->check(CLI::Range(2, 1000));
  threshold->add_option("--scores", in.scores, "CSV node_id,score,label")->check(CLI::ExistingFile);
  auto* embed = app.add_subcommand("export-embeddings", "Write guidance embeddings of labelled nodes");
  add_common(embed);
  add_data(embed, false);
  embed->add_option("--model", in.model, "Generator directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("invalid_argument", e.what());
    return 2;
  }

  try {
    if (*synth) return cmd_synth(c);
    if (*ingest) return cmd_ingest(c, in);
    if (*split) return cmd_split(c, in);
    if (*train_diff) return cmd_train_diffusion(c, in);
    if (*generate) return cmd_generate(c, in);
    if (*train_det) return cmd_train_detector(c, in);
    if (*evaluate) return cmd_evaluate(c, in);
    if (*compare) return cmd_compare_modes(c, in);
    if (*threshold) return cmd_threshold_analyze(c, in);
    if (*embed) return cmd_export_embeddings(c, in);
  } catch (const Error& e) {
    print_error(baed::error_code_name(e.code()), e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    print_error("io_error", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal_error", e.what());
    return 1;
  }
  return 1;
}
