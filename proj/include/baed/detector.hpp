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

// Inductive ego-graph anomaly detector: stacked graph convolutions, layer
// aggregation, a centre-minus-mean deviation readout and an MLP
// discriminator. Scoring reads nothing but the EgoGraph it is handed.

#ifndef BAED_DETECTOR_HPP_
#define BAED_DETECTOR_HPP_

#include "baed/autodiff.hpp"
#include "baed/graph.hpp"
#include "baed/numeric.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace baed {

// D^{-1/2} (A + I) D^{-1/2}, with D the degree matrix of A + I.
template <class Derived>
Matrix gcn_normalize(const Eigen::MatrixBase<Derived>& adj) {
  Matrix a = adj;
  a.diagonal().array() += 1.0;
  const ColVector inv_sqrt = a.rowwise().sum().array().rsqrt().matrix();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

enum class Aggregation { kMean, kConcat };

struct DetectorConfig {
  int layers = 2;
  int hidden = 64;
  Aggregation aggregation = Aggregation::kMean;
  double prob_clamp = 1e-7;
};

// Message-passing backbone producing one embedding matrix per layer.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual void init(ParamStore& store, Eigen::Index input_dim,
                    const DetectorConfig& cfg, Rng& rng) const = 0;
  virtual std::vector<Var> layers(Tape& t, const ParamBinder& param,
                                  const EgoGraph& ego,
                                  const DetectorConfig& cfg) const = 0;
};

// E(l) = ReLU(Â E(l-1) W(l)).
class GcnBackbone final : public Backbone {
 public:
  void init(ParamStore& store, Eigen::Index input_dim,
            const DetectorConfig& cfg, Rng& rng) const override;
  std::vector<Var> layers(Tape& t, const ParamBinder& param,
                          const EgoGraph& ego,
                          const DetectorConfig& cfg) const override;
};

struct DetectorParams {
  DetectorConfig config;
  Eigen::Index input_dim = 0;
  std::shared_ptr<const Backbone> backbone = std::make_shared<GcnBackbone>();
  ParamStore store;
};

DetectorParams make_detector(Eigen::Index input_dim, const DetectorConfig& cfg,
                             Rng& rng);

struct EgoEncoding {
  std::vector<Matrix> layers;
  Matrix aggregated;
  RowVector deviation;
};

EgoEncoding encode_ego(const DetectorParams& params, const EgoGraph& ego);

// Centre row (local index 0) minus the mean over all rows, centre included.
template <class Derived>
RowVector deviation_readout(const Eigen::MatrixBase<Derived>& h) {
  if (h.rows() < 1) throw Error(ErrorCode::kInvalidArgument, "empty encoding");
  return h.row(0) - h.colwise().mean();
}

double score_ego(const DetectorParams& params, const EgoGraph& ego);

struct DetectorLoss {
  double mean_loss = 0.0;
  std::vector<double> sample_losses;
  std::vector<double> scores;
};

// Mean clamped binary cross-entropy over the batch; gradients are added to
// params.store. Labels come from each ego's label field.
DetectorLoss detector_loss_and_grads(DetectorParams& params,
                                     std::span<const EgoGraph> batch);

}  // namespace baed

#endif  // BAED_DETECTOR_HPP_
