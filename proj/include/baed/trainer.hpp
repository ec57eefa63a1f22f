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

// Balanced detector training: every batch is topped up with anomalous
// ego-graphs until it holds as many anomalies as normals. Label 1 always
// means anomalous.

#ifndef BAED_TRAINER_HPP_
#define BAED_TRAINER_HPP_

#include "baed/detector.hpp"
#include "baed/diffusion.hpp"
#include "baed/graph.hpp"
#include "baed/guidance.hpp"
#include "baed/numeric.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace baed {

enum class AugmentMode { kNone, kRandomDuplicate, kUnconditional, kBaed };

std::string_view mode_name(AugmentMode mode);
AugmentMode parse_mode(std::string_view name);

// Pretrained diffusion model: denoiser, guidance encoder and schedule.
struct Generator {
  DenoiserParams denoiser;
  GinParams gin;
  NoiseSchedule schedule;
};

// Last observed loss per anomalous node; unseen nodes read the mean of the
// cached values (zero while empty).
class LossCache {
 public:
  double get(NodeId id) const;
  void update(NodeId id, double loss);
  double running_mean() const;
  std::size_t size() const { return losses_.size(); }

 private:
  std::map<NodeId, double> losses_;
  double sum_ = 0.0;
};

struct AugmentContext {
  AugmentMode mode = AugmentMode::kNone;
  const Generator* generator = nullptr;
  const LossCache* losses = nullptr;
  CurriculumConfig curriculum;
  double iteration = 0.0;
  bool uniform_weights = true;
  GuidanceEma* ema = nullptr;
  // Training anomalous egos, their centre features and their sizes.
  std::span<const EgoGraph> anomaly_pool;
  const Matrix* feature_pool = nullptr;
  // Features for non-centre generated nodes; null reuses feature_pool.
  const Matrix* neighbor_pool = nullptr;
  std::span<const Eigen::Index> size_pool;
};

// Training anomalous egos with their sizes, centre feature rows and
// non-centre feature rows.
struct AnomalyPools {
  std::vector<EgoGraph> egos;
  std::vector<Eigen::Index> sizes;
  Matrix centers;
  Matrix neighbors;
};

AnomalyPools build_anomaly_pools(std::span<const EgoGraph> egos);

// Draws count egos from the reverse process under one guidance vector. Sizes
// are sampled from the pool and capped at the denoiser's n_max.
std::vector<EgoGraph> generate_anomalous_egos(const Generator& gen, const RowVector& guidance,
                                              std::size_t count, std::span<const Eigen::Index> sizes,
                                              const Matrix& centers, const Matrix& neighbors,
                                              Rng& rng);

struct BalancedBatch {
  std::vector<EgoGraph> egos;
  std::size_t real_count = 0;
  std::size_t generated = 0;
  double anomaly_fraction = 0.0;
  RowVector guidance;
};

// Appends max(0, normals - anomalies) anomalous egos; real samples keep
// their positions at the front.
BalancedBatch balance_batch(std::span<const EgoGraph> batch, AugmentContext& ctx, Rng& rng);

// (N_a + M) / (N_a + N_n + M).
double effective_ratio(double n_anomalous, double n_normal, double generated);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  AugmentMode mode = AugmentMode::kNone;
  int hops = 1;
  std::size_t max_nodes = 32;
  DetectorConfig detector;
  double curriculum_alpha = 5.0;
  // Fixed curriculum shift; unset uses the median of the previous epoch's
  // real-anomaly losses.
  std::optional<double> beta_shift;
  double ema_decay = 0.9;
  double f1_threshold = 0.5;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_auroc = 0.0;
  double val_auprc = 0.0;
  double val_f1 = 0.0;
  std::size_t generated_count = 0;
};

struct TrainResult {
  DetectorParams detector;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
  std::vector<double> batch_anomaly_fractions;
};

std::vector<EgoGraph> extract_egos(const AttributedGraph& g, std::span<const NodeId> ids,
                                   int hops, std::size_t max_nodes, std::uint64_t seed);

std::vector<double> score_egos(const DetectorParams& params, std::span<const EgoGraph> egos);

TrainResult train_detector(const AttributedGraph& g, const DatasetSplit& split,
                           const TrainConfig& cfg, const Generator* generator = nullptr);

std::string history_csv(std::span<const EpochRecord> history);

}  // namespace baed

#endif  // BAED_TRAINER_HPP_
