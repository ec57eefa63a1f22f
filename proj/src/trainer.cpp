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

#include "baed/trainer.hpp"

#include "baed/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iterator>

namespace baed {

namespace {

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::vector<int> binary_labels(std::span<const EgoGraph> egos) {
  std::vector<int> y;
  for (const auto& e : egos) y.push_back(e.label == Label::kAnomalous ? 1 : 0);
  return y;
}

// Guidance for generation: curriculum-weighted GIN embeddings of the batch
// anomalies, or the running fallback when the batch has none.
RowVector batch_guidance(std::span<const EgoGraph> batch, AugmentContext& ctx) {
  const auto& gin = ctx.generator->gin;
  std::vector<RowVector> emb;
  std::vector<double> weights;
  for (const auto& e : batch) {
    if (e.label != Label::kAnomalous) continue;
    emb.push_back(gin_encode(gin, e));
    if (ctx.uniform_weights) {
      weights.push_back(1.0);
    } else {
      const double loss = ctx.losses && !e.synthetic() ? ctx.losses->get(e.node_ids[0]) : 0.0;
      weights.push_back(curriculum_weight(loss, ctx.iteration, ctx.curriculum));
    }
  }
  if (emb.empty()) {
    if (!ctx.ema || !ctx.ema->initialized()) {
      throw Error(ErrorCode::kState, "batch has no anomalies and no fallback guidance");
    }
    return ctx.ema->value();
  }
  RowVector g = aggregate_guidance(emb, weights);
  if (ctx.ema) ctx.ema->update(g);
  return g;
}

}  // namespace

std::string_view mode_name(AugmentMode mode) {
  switch (mode) {
    case AugmentMode::kNone: return "none";
    case AugmentMode::kRandomDuplicate: return "random-duplicate";
    case AugmentMode::kUnconditional: return "unconditional";
    case AugmentMode::kBaed: return "baed";
  }
  return "none";
}

AugmentMode parse_mode(std::string_view name) {
  for (auto m : {AugmentMode::kNone, AugmentMode::kRandomDuplicate, AugmentMode::kUnconditional,
                 AugmentMode::kBaed}) {
    if (mode_name(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown augmentation mode '" + std::string(name) +
                  "' (expected none, random-duplicate, unconditional or baed)");
}

double LossCache::get(NodeId id) const {
  const auto it = losses_.find(id);
  return it != losses_.end() ? it->second : running_mean();
}

void LossCache::update(NodeId id, double loss) {
  if (!std::isfinite(loss) || loss < 0.0) {
    throw Error(ErrorCode::kNumeric, "cached loss must be finite and non-negative");
  }
  auto [it, inserted] = losses_.try_emplace(id, loss);
  if (!inserted) {
    sum_ -= it->second;
    it->second = loss;
  }
  sum_ += loss;
}

double LossCache::running_mean() const {
  return losses_.empty() ? 0.0 : sum_ / static_cast<double>(losses_.size());
}

AnomalyPools build_anomaly_pools(std::span<const EgoGraph> egos) {
  AnomalyPools pools;
  Eigen::Index neighbor_rows = 0;
  for (const auto& e : egos) {
    if (e.label != Label::kAnomalous) continue;
    pools.egos.push_back(e);
    pools.sizes.push_back(e.size());
    neighbor_rows += e.size() - 1;
  }
  if (pools.egos.empty()) throw Error(ErrorCode::kInvalidArgument, "train split has no anomalies");
  const Eigen::Index d = pools.egos.front().features.cols();
  pools.centers.resize(static_cast<Eigen::Index>(pools.egos.size()), d);
  pools.neighbors.resize(neighbor_rows, d);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < pools.egos.size(); ++i) {
    const auto& e = pools.egos[i];
    pools.centers.row(static_cast<Eigen::Index>(i)) = e.features.row(0);
    pools.neighbors.middleRows(r, e.size() - 1) = e.features.bottomRows(e.size() - 1);
    r += e.size() - 1;
  }
  return pools;
}

std::vector<EgoGraph> generate_anomalous_egos(const Generator& gen, const RowVector& guidance,
                                              std::size_t count, std::span<const Eigen::Index> sizes,
                                              const Matrix& centers, const Matrix& neighbors,
                                              Rng& rng) {
  if (sizes.empty() || centers.rows() == 0) {
    throw Error(ErrorCode::kState, "generation needs anomaly feature and size pools");
  }
  std::vector<EgoGraph> out;
  out.reserve(count);
  const Rng base = rng.stream("generate", rng.next_u64());
  for (std::size_t i = 0; i < count; ++i) {
    Rng sample_rng = base.stream("sample", i);
    const Eigen::Index m = std::min<Eigen::Index>(sizes[sample_rng.uniform_index(sizes.size())],
                                                  gen.denoiser.config.n_max);
    const Matrix adj = generate_adjacency(gen.denoiser, guidance, m, gen.schedule, sample_rng);
    out.push_back(assemble_ego(adj, centers, neighbors.rows() > 0 ? neighbors : centers, sample_rng));
  }
  return out;
}

BalancedBatch balance_batch(std::span<const EgoGraph> batch, AugmentContext& ctx, Rng& rng) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  BalancedBatch out;
  out.egos.assign(batch.begin(), batch.end());
  out.real_count = batch.size();
  std::size_t anomalies = 0;
  for (const auto& e : batch) anomalies += e.label == Label::kAnomalous;
  const std::size_t normals = batch.size() - anomalies;
  const std::size_t deficit = normals > anomalies ? normals - anomalies : 0;

  if (ctx.mode != AugmentMode::kNone && deficit > 0) {
    if (ctx.mode == AugmentMode::kRandomDuplicate) {
      if (ctx.anomaly_pool.empty()) throw Error(ErrorCode::kState, "no anomalous egos to duplicate");
      for (std::size_t i = 0; i < deficit; ++i) {
        out.egos.push_back(ctx.anomaly_pool[rng.uniform_index(ctx.anomaly_pool.size())]);
      }
    } else {
      if (!ctx.generator) {
        throw Error(ErrorCode::kState, std::string("mode ") + std::string(mode_name(ctx.mode)) +
                                           " requires a pretrained diffusion model");
      }
      if (!ctx.feature_pool || ctx.size_pool.empty()) {
        throw Error(ErrorCode::kState, "generation needs anomaly feature and size pools");
      }
      const auto& gen = *ctx.generator;
      out.guidance = ctx.mode == AugmentMode::kBaed
                         ? batch_guidance(batch, ctx)
                         : RowVector::Zero(gen.denoiser.config.guidance_dim);
      const Matrix& neighbors = ctx.neighbor_pool ? *ctx.neighbor_pool : *ctx.feature_pool;
      auto generated = generate_anomalous_egos(gen, out.guidance, deficit, ctx.size_pool,
                                               *ctx.feature_pool, neighbors, rng);
      std::move(generated.begin(), generated.end(), std::back_inserter(out.egos));
    }
    out.generated = deficit;
  }
  std::size_t total_anom = 0;
  for (const auto& e : out.egos) total_anom += e.label == Label::kAnomalous;
  out.anomaly_fraction = static_cast<double>(total_anom) / static_cast<double>(out.egos.size());
  return out;
}

double effective_ratio(double n_anomalous, double n_normal, double generated) {
  if (n_anomalous < 0 || n_normal < 0 || generated < 0) {
    throw Error(ErrorCode::kInvalidArgument, "counts must be non-negative");
  }
  const double den = n_anomalous + n_normal + generated;
  if (den == 0.0) throw Error(ErrorCode::kInvalidArgument, "zero denominator");
  return (n_anomalous + generated) / den;
}

std::vector<EgoGraph> extract_egos(const AttributedGraph& g, std::span<const NodeId> ids, int hops,
                                   std::size_t max_nodes, std::uint64_t seed) {
  std::vector<EgoGraph> out;
  out.reserve(ids.size());
  for (NodeId v : ids) out.push_back(extract_ego_graph(g, v, hops, max_nodes, seed));
  return out;
}

std::vector<double> score_egos(const DetectorParams& params, std::span<const EgoGraph> egos) {
  std::vector<double> s;
  s.reserve(egos.size());
  for (const auto& e : egos) s.push_back(score_ego(params, e));
  return s;
}

TrainResult train_detector(const AttributedGraph& g, const DatasetSplit& split,
                           const TrainConfig& cfg, const Generator* generator) {
  if (cfg.epochs < 1 || cfg.batch_size < 2) {
    throw Error(ErrorCode::kInvalidArgument, "training needs epochs >= 1 and batch_size >= 2");
  }
  if ((cfg.mode == AugmentMode::kBaed || cfg.mode == AugmentMode::kUnconditional) && !generator) {
    throw Error(ErrorCode::kState, std::string("mode ") + std::string(mode_name(cfg.mode)) +
                                       " requires a pretrained diffusion model");
  }
  const auto train = extract_egos(g, split.train, cfg.hops, cfg.max_nodes, cfg.seed);
  const auto val = extract_egos(g, split.val, cfg.hops, cfg.max_nodes, cfg.seed);

  for (const auto& e : train) {
    if (e.label == Label::kUnknown) throw Error(ErrorCode::kInvalidArgument, "unlabelled training node");
  }
  const AnomalyPools pools = build_anomaly_pools(train);
  const auto& anomaly_pool = pools.egos;
  const auto val_labels = binary_labels(val);

  const Rng root(cfg.seed, "detector-train", 0);
  Rng init = root.stream("init");
  TrainResult result;
  result.detector = make_detector(g.feature_dim(), cfg.detector, init);
  DetectorParams& params = result.detector;
  DetectorParams best = params;
  double best_auroc = -1.0;
  AdamState opt;

  LossCache cache;
  GuidanceEma ema(cfg.ema_decay);
  if (generator && cfg.mode == AugmentMode::kBaed) {
    std::vector<RowVector> emb;
    for (const auto& e : anomaly_pool) emb.push_back(gin_encode(generator->gin, e));
    ema.reset(aggregate_guidance(emb, std::vector<double>(emb.size(), 1.0)));
  }
  AugmentContext ctx;
  ctx.mode = cfg.mode;
  ctx.generator = generator;
  ctx.losses = &cache;
  ctx.ema = &ema;
  ctx.anomaly_pool = anomaly_pool;
  ctx.feature_pool = &pools.centers;
  ctx.neighbor_pool = pools.neighbors.rows() > 0 ? &pools.neighbors : nullptr;
  ctx.size_pool = pools.sizes;
  ctx.curriculum.alpha = cfg.curriculum_alpha;

  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t batches_per_epoch = (train.size() + bs - 1) / bs;
  ctx.curriculum.total_iters = static_cast<double>(batches_per_epoch) * cfg.epochs;
  std::size_t iteration = 0;
  std::vector<double> prev_epoch_losses;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    ctx.uniform_weights = epoch == 0;
    ctx.curriculum.beta_shift = cfg.beta_shift.value_or(
        prev_epoch_losses.empty() ? cache.running_mean() : median(prev_epoch_losses));
    std::vector<double> epoch_anomaly_losses;

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng order_rng = root.stream("epoch", static_cast<std::uint64_t>(epoch));
    order_rng.shuffle(order.begin(), order.end());

    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      std::vector<EgoGraph> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i) batch.push_back(train[order[i]]);
      ctx.iteration = static_cast<double>(iteration);
      Rng batch_rng = root.stream("batch", iteration);
      auto balanced = balance_batch(batch, ctx, batch_rng);
      const auto loss = detector_loss_and_grads(params, balanced.egos);
      adam_step(params.store, opt, cfg.lr);

      for (std::size_t i = 0; i < balanced.real_count; ++i) {
        const auto& e = balanced.egos[i];
        if (e.label != Label::kAnomalous) continue;
        cache.update(e.node_ids[0], loss.sample_losses[i]);
        epoch_anomaly_losses.push_back(loss.sample_losses[i]);
      }
      loss_sum += loss.mean_loss * static_cast<double>(balanced.egos.size());
      loss_count += balanced.egos.size();
      rec.generated_count += balanced.generated;
      result.batch_anomaly_fractions.push_back(balanced.anomaly_fraction);
      ++iteration;
    }
    rec.train_loss = loss_sum / static_cast<double>(loss_count);
    const auto scores = score_egos(params, val);
    rec.val_auroc = auroc(scores, val_labels);
    rec.val_auprc = auprc(scores, val_labels);
    rec.val_f1 = f1_score(scores, val_labels, cfg.f1_threshold);
    if (rec.val_auroc > best_auroc) {
      best_auroc = rec.val_auroc;
      best = params;
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
    prev_epoch_losses = std::move(epoch_anomaly_losses);
  }
  result.detector = std::move(best);
  return result;
}

std::string history_csv(std::span<const EpochRecord> history) {
  std::string out = "epoch,train_loss,val_auroc,val_auprc,val_f1,generated_count\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + fmt(r.train_loss) + "," + fmt(r.val_auroc) + "," +
           fmt(r.val_auprc) + "," + fmt(r.val_f1) + "," + std::to_string(r.generated_count) + "\n";
  }
  return out;
}

}  // namespace baed
