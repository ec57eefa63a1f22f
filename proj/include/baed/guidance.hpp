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

// GIN guidance encoder and the curriculum weighting of guidance embeddings.

#ifndef BAED_GUIDANCE_HPP_
#define BAED_GUIDANCE_HPP_

#include "baed/autodiff.hpp"
#include "baed/graph.hpp"
#include "baed/numeric.hpp"

#include <span>
#include <vector>

namespace baed {

enum class GinReadout { kMean, kSum };

struct GinConfig {
  int layers = 2;
  int dim = 64;
  double eps = 0.0;
  GinReadout readout = GinReadout::kMean;
};

struct GinParams {
  GinConfig config;
  Eigen::Index input_dim = 0;
  ParamStore store;
};

GinParams make_gin(Eigen::Index input_dim, const GinConfig& cfg, Rng& rng);

// h(k) = MLP_k((1 + eps) h(k-1) + sum of neighbour rows), MLP = W2 ReLU(W1 x + b1) + b2,
// followed by a mean (or sum) over nodes of the last layer.
Var gin_encode(Tape& t, const ParamBinder& param, const GinParams& params,
               const EgoGraph& ego);
RowVector gin_encode(const GinParams& params, const EgoGraph& ego);

struct CurriculumConfig {
  double alpha = 5.0;
  double beta_shift = 0.0;
  double total_iters = 1.0;
};

// sigmoid(alpha (loss - beta_shift)) * t / total_iters.
double curriculum_weight(double loss, double t, const CurriculumConfig& cfg);

// Weights normalised to sum to one; uniform when they are all zero.
std::vector<double> normalize_weights(std::span<const double> weights);

RowVector aggregate_guidance(std::span<const RowVector> embeddings,
                             std::span<const double> weights);

// Exponential moving average of aggregated guidance, used when a batch has
// no real anomalies to guide generation.
class GuidanceEma {
 public:
  explicit GuidanceEma(double decay = 0.9) : decay_(decay) {}
  void reset(const RowVector& value) { value_ = value; }
  void update(const RowVector& value);
  bool initialized() const { return value_.size() > 0; }
  const RowVector& value() const;

 private:
  double decay_;
  RowVector value_;
};

}  // namespace baed

#endif  // BAED_GUIDANCE_HPP_
