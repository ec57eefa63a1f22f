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

#include "baed/detector.hpp"

#include <cmath>

namespace baed {

namespace {

std::string conv_name(int l) { return "conv." + std::to_string(l) + ".W"; }

struct DetectorForward {
  std::vector<Var> layers;
  Var aggregated;
  Var deviation;
  Var prob;
};

DetectorForward detector_forward(Tape& t, const ParamBinder& param,
                                 const DetectorParams& params,
                                 const EgoGraph& ego) {
  if (ego.features.cols() != params.input_dim) {
    throw Error(ErrorCode::kShapeMismatch,
                "ego feature dim " + std::to_string(ego.features.cols()) +
                    " != detector input dim " +
                    std::to_string(params.input_dim));
  }
  if (ego.size() < 1) throw Error(ErrorCode::kInvalidArgument, "empty ego");
  DetectorForward f;
  f.layers = params.backbone->layers(t, param, ego, params.config);
  if (params.config.aggregation == Aggregation::kMean) {
    Var acc = f.layers[0];
    for (std::size_t l = 1; l < f.layers.size(); ++l) acc = add(t, acc, f.layers[l]);
    f.aggregated = scale(t, acc, 1.0 / static_cast<double>(f.layers.size()));
  } else {
    f.aggregated = concat_cols(t, f.layers);
  }
  f.deviation = sub(t, row(t, f.aggregated, 0), mean_rows(t, f.aggregated));
  Var hidden = relu(t, add_row(t, matmul(t, f.deviation, param("disc.W1")),
                               param("disc.b1")));
  Var logit = add_row(t, matmul(t, hidden, param("disc.W2")), param("disc.b2"));
  f.prob = sigmoid(t, logit);
  return f;
}

}  // namespace

void GcnBackbone::init(ParamStore& store, Eigen::Index input_dim,
                       const DetectorConfig& cfg, Rng& rng) const {
  Eigen::Index in = input_dim;
  for (int l = 0; l < cfg.layers; ++l) {
    store.add(conv_name(l), glorot(rng, in, cfg.hidden));
    in = cfg.hidden;
  }
}

std::vector<Var> GcnBackbone::layers(Tape& t, const ParamBinder& param,
                                     const EgoGraph& ego,
                                     const DetectorConfig& cfg) const {
  Var a_hat = t.constant(gcn_normalize(ego.adjacency));
  Var e = t.input(ego.features);
  std::vector<Var> out;
  for (int l = 0; l < cfg.layers; ++l) {
    e = relu(t, matmul(t, a_hat, matmul(t, e, param(conv_name(l)))));
    out.push_back(e);
  }
  return out;
}

DetectorParams make_detector(Eigen::Index input_dim, const DetectorConfig& cfg,
                             Rng& rng) {
  if (cfg.layers < 1 || cfg.hidden < 1 || input_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "detector needs L >= 1, h >= 1, d >= 1");
  }
  DetectorParams p;
  p.config = cfg;
  p.input_dim = input_dim;
  p.backbone->init(p.store, input_dim, cfg, rng);
  const Eigen::Index readout =
      cfg.aggregation == Aggregation::kMean ? cfg.hidden : cfg.hidden * cfg.layers;
  p.store.add("disc.W1", glorot(rng, readout, cfg.hidden));
  p.store.add("disc.b1", Matrix::Zero(1, cfg.hidden));
  p.store.add("disc.W2", glorot(rng, cfg.hidden, 1));
  p.store.add("disc.b2", Matrix::Zero(1, 1));
  return p;
}

EgoEncoding encode_ego(const DetectorParams& params, const EgoGraph& ego) {
  Tape t(false);
  auto f = detector_forward(t, bind_params(t, params.store), params, ego);
  EgoEncoding enc;
  for (Var l : f.layers) enc.layers.push_back(t.value(l));
  enc.aggregated = t.value(f.aggregated);
  enc.deviation = t.value(f.deviation);
  return enc;
}

double score_ego(const DetectorParams& params, const EgoGraph& ego) {
  Tape t(false);
  auto f = detector_forward(t, bind_params(t, params.store), params, ego);
  return t.value(f.prob)(0, 0);
}

DetectorLoss detector_loss_and_grads(DetectorParams& params,
                                     std::span<const EgoGraph> batch) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  DetectorLoss out;
  const double weight = 1.0 / static_cast<double>(batch.size());
  const Matrix ones = Matrix::Ones(1, 1);
  for (const EgoGraph& ego : batch) {
    if (ego.label == Label::kUnknown) {
      throw Error(ErrorCode::kInvalidArgument, "batch contains an unlabelled ego");
    }
    Tape t(true);
    auto f = detector_forward(t, bind_params(t, params.store), params, ego);
    const Matrix target =
        Matrix::Constant(1, 1, ego.label == Label::kAnomalous ? 1.0 : 0.0);
    Var loss = bce(t, f.prob, target, ones, params.config.prob_clamp);
    t.backward(loss, Matrix::Constant(1, 1, weight));
    const double l = t.value(loss)(0, 0);
    out.sample_losses.push_back(l);
    out.scores.push_back(t.value(f.prob)(0, 0));
    out.mean_loss += weight * l;
  }
  return out;
}

}  // namespace baed
