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

// Experiment configuration and the end-to-end pipeline stages shared by the
// command-line tool and the acceptance checks.

#ifndef BAED_EXPERIMENT_HPP_
#define BAED_EXPERIMENT_HPP_

#include "baed/trainer.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace baed {

// Flat, namespaced keys such as "diffusion.T". Every key has a default;
// unknown keys and type changes are rejected. Precedence is
// flag > file > default.
class ExperimentConfig {
 public:
  ExperimentConfig();

  static ExperimentConfig from_file(const std::filesystem::path& path);

  // Merges a flat JSON object; origin names the source in error messages.
  void merge(const nlohmann::json& flat, const std::string& origin);
  // Parses value according to the key's default type.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.contains(key); }
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<std::uint64_t> get_seeds(const std::string& key) const;

  // Canonical JSON of every key, in definition order.
  std::string dump() const;
  std::string digest() const;
  const nlohmann::ordered_json& values() const { return values_; }

 private:
  const nlohmann::ordered_json& at(const std::string& key) const;
  nlohmann::ordered_json values_;
};

BenchmarkConfig benchmark_config(const ExperimentConfig& cfg);
std::array<double, 3> split_ratios(const ExperimentConfig& cfg);
NoiseSchedule noise_schedule(const ExperimentConfig& cfg);
DenoiserConfig denoiser_config(const ExperimentConfig& cfg);
GinConfig gin_config(const ExperimentConfig& cfg);
DetectorConfig detector_config(const ExperimentConfig& cfg);
DiffusionTrainConfig diffusion_train_config(const ExperimentConfig& cfg, std::uint64_t seed);
TrainConfig train_config(const ExperimentConfig& cfg, std::uint64_t seed, AugmentMode mode);

// --- pipeline stages ---------------------------------------------------------

std::vector<EgoGraph> training_anomaly_egos(const AttributedGraph& g, const DatasetSplit& split,
                                            const ExperimentConfig& cfg, std::uint64_t seed);

// Builds and trains the guidance encoder and denoiser on the training
// anomalies; per-epoch losses go to losses when given.
Generator train_generator(const AttributedGraph& g, const DatasetSplit& split,
                          const ExperimentConfig& cfg, std::uint64_t seed,
                          std::vector<double>* losses = nullptr);

struct EvalReport {
  double auroc = 0.0;
  double auprc = 0.0;
  double f1 = 0.0;
  double threshold = 0.5;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::uint64_t seed = 0;
};

EvalReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                           double threshold, std::uint64_t seed);

struct NodeScores {
  std::vector<NodeId> ids;
  std::vector<double> scores;
  std::vector<int> labels;
};

NodeScores score_nodes(const DetectorParams& params, const AttributedGraph& g,
                       std::span<const NodeId> ids, int hops, std::size_t max_nodes,
                       std::uint64_t seed);

struct ModeRun {
  AugmentMode mode = AugmentMode::kNone;
  std::uint64_t seed = 0;
  EvalReport report;
};

// Per seed: synthesize, split, pre-train the generator when a mode needs
// it, then train and test one detector per mode. Rows are ordered by mode,
// then seed.
std::vector<ModeRun> compare_modes(const ExperimentConfig& cfg, std::span<const AugmentMode> modes,
                                   std::span<const std::uint64_t> seeds);

// --- serialization -------------------------------------------------------------

std::string report_json(const EvalReport& r, const std::string& digest);
std::string comparison_csv(std::span<const ModeRun> runs, const std::string& digest);
std::string comparison_json(std::span<const ModeRun> runs, const std::string& digest);
std::string scores_csv(const NodeScores& s, const std::string& digest, std::uint64_t seed);
NodeScores parse_scores_csv(const std::string& text);

std::string split_json(const DatasetSplit& split, const std::string& digest, std::uint64_t seed);
DatasetSplit parse_split_json(const std::string& text);

void save_generator(const Generator& gen, const std::filesystem::path& dir,
                    const std::string& digest, std::uint64_t seed,
                    std::span<const double> losses);
Generator load_generator(const std::filesystem::path& dir);

void save_detector(const DetectorParams& det, const std::filesystem::path& dir,
                   const std::string& digest, std::uint64_t seed, int hops,
                   std::size_t max_nodes, AugmentMode mode, int best_epoch);
struct LoadedDetector {
  DetectorParams params;
  int hops = 1;
  std::size_t max_nodes = 32;
  std::uint64_t seed = 0;
};
LoadedDetector load_detector(const std::filesystem::path& dir);

}  // namespace baed

#endif  // BAED_EXPERIMENT_HPP_
