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

#include "baed/guidance.hpp"

#include <cmath>
#include <string>

namespace baed {

namespace {

std::string gin_name(int k, const char* leaf) {
  return "gin." + std::to_string(k) + "." + leaf;
}

}  // namespace

GinParams make_gin(Eigen::Index input_dim, const GinConfig& cfg, Rng& rng) {
  if (cfg.layers < 1 || cfg.dim < 1 || input_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "GIN needs K >= 1, d_g >= 1, d >= 1");
  }
  GinParams p;
  p.config = cfg;
  p.input_dim = input_dim;
  Eigen::Index in = input_dim;
  for (int k = 0; k < cfg.layers; ++k) {
    p.store.add(gin_name(k, "W1"), glorot(rng, in, cfg.dim));
    p.store.add(gin_name(k, "b1"), Matrix::Zero(1, cfg.dim));
    p.store.add(gin_name(k, "W2"), glorot(rng, cfg.dim, cfg.dim));
    p.store.add(gin_name(k, "b2"), Matrix::Zero(1, cfg.dim));
    in = cfg.dim;
  }
  return p;
}

Var gin_encode(Tape& t, const ParamBinder& param, const GinParams& params,
               const EgoGraph& ego) {
  if (ego.features.cols() != params.input_dim) {
    throw Error(ErrorCode::kShapeMismatch,
                "ego feature dim " + std::to_string(ego.features.cols()) +
                    " != GIN input dim " + std::to_string(params.input_dim));
  }
  if (ego.size() < 1) throw Error(ErrorCode::kInvalidArgument, "empty ego");
  Matrix prop = ego.adjacency;
  prop.diagonal().array() += 1.0 + params.config.eps;
  Var a = t.constant(std::move(prop));
  Var h = t.input(ego.features);
  for (int k = 0; k < params.config.layers; ++k) {
    Var x = matmul(t, a, h);
    x = relu(t, add_row(t, matmul(t, x, param(gin_name(k, "W1"))), param(gin_name(k, "b1"))));
    h = add_row(t, matmul(t, x, param(gin_name(k, "W2"))), param(gin_name(k, "b2")));
  }
  Var out = mean_rows(t, h);
  if (params.config.readout == GinReadout::kSum) {
    out = scale(t, out, static_cast<double>(ego.size()));
  }
  return out;
}

RowVector gin_encode(const GinParams& params, const EgoGraph& ego) {
  Tape t(false);
  return t.value(gin_encode(t, bind_params(t, params.store), params, ego));
}

double curriculum_weight(double loss, double t, const CurriculumConfig& cfg) {
  if (!(cfg.alpha > 0.0) || !(cfg.total_iters >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "curriculum needs alpha > 0 and total_iters >= 1");
  }
  if (!(t >= 0.0 && t <= cfg.total_iters)) {
    throw Error(ErrorCode::kInvalidArgument, "iteration outside [0, total_iters]");
  }
  const double z = cfg.alpha * (loss - cfg.beta_shift);
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                            : std::exp(z) / (1.0 + std::exp(z));
  return s * (t / cfg.total_iters);
}

std::vector<double> normalize_weights(std::span<const double> weights) {
  if (weights.empty()) throw Error(ErrorCode::kInvalidArgument, "no weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument, "weights must be finite and non-negative");
    }
    total += w;
  }
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[i] = total > 0.0 ? weights[i] / total
                         : 1.0 / static_cast<double>(weights.size());
  }
  return out;
}

RowVector aggregate_guidance(std::span<const RowVector> embeddings,
                             std::span<const double> weights) {
  if (embeddings.empty()) throw Error(ErrorCode::kInvalidArgument, "no embeddings");
  if (embeddings.size() != weights.size()) {
    throw Error(ErrorCode::kShapeMismatch, "embedding and weight counts differ");
  }
  const auto w = normalize_weights(weights);
  RowVector out = RowVector::Zero(embeddings[0].size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != out.size()) {
      throw Error(ErrorCode::kShapeMismatch, "embedding widths differ");
    }
    out += w[i] * embeddings[i];
  }
  return out;
}

void GuidanceEma::update(const RowVector& value) {
  if (!initialized()) {
    value_ = value;
    return;
  }
  value_ = decay_ * value_ + (1.0 - decay_) * value;
}

const RowVector& GuidanceEma::value() const {
  if (!initialized()) throw Error(ErrorCode::kState, "guidance EMA is empty");
  return value_;
}

}  // namespace baed
