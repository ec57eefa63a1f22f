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

// Discrete Bernoulli diffusion over symmetric binary adjacency matrices:
// noise schedules, forward sampling, exact posteriors, the conditional
// attention denoiser, its one-step training loss, guided generation and
// ELBO diagnostics.

#ifndef BAED_DIFFUSION_HPP_
#define BAED_DIFFUSION_HPP_

#include "baed/autodiff.hpp"
#include "baed/graph.hpp"
#include "baed/guidance.hpp"
#include "baed/numeric.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace baed {

// Index 0 holds the identity step (beta 0, alpha_bar 1); steps run 1..T.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  double p = 0.0;

  std::string digest() const;
};

inline constexpr double kMaxFinalAlphaBar = 0.01;

// With validate set, betas must lie in (0, 1) and alpha_bar_T must reach
// the prior; without it, betas in [0, 1] are accepted as given.
NoiseSchedule make_schedule(std::vector<double> betas, double p = 0.0,
                            bool validate = true);
NoiseSchedule make_linear_schedule(int T = 128, double beta_start = 1e-4,
                                   double beta_end = 0.2, double p = 0.0);

// Smallest beta_end (to 1e-6) for which a linear schedule reaches the prior.
double required_beta_end(int T, double beta_start);

// Per-edge Bernoulli((1 - beta_t) A + beta_t p), mirrored, zero diagonal.
Matrix q_sample_step(const Matrix& a_prev, int t, const NoiseSchedule& sched, Rng& rng);
// Per-edge Bernoulli(alpha_bar_t A0 + (1 - alpha_bar_t) p).
Matrix q_sample_closed(const Matrix& a0, int t, const NoiseSchedule& sched, Rng& rng);

// q(A^{t-1} = 1 | A^t = a_t, A^0 = a_0).
double posterior_prob(int a_t, int a_0, int t, const NoiseSchedule& sched);
Matrix posterior_matrix(const Matrix& a_t, const Matrix& a0, int t,
                        const NoiseSchedule& sched);

struct DenoiserConfig {
  int model_dim = 64;
  int heads = 8;
  int blocks = 2;
  int ff_dim = 128;
  double dropout = 0.1;
  int n_max = 32;
  int guidance_dim = 64;
};

inline constexpr double kEdgeProbClamp = 1e-6;
// Edge-head start: sparse graphs, existing edges kept.
inline constexpr double kEdgeBiasInit = -4.0;
inline constexpr double kEdgeSkipInit = 8.0;

struct DenoiserParams {
  DenoiserConfig config;
  int T = 0;
  Matrix time_table;  // T x model_dim sinusoids, row t-1 for step t
  ParamStore store;
};

DenoiserParams make_denoiser(const DenoiserConfig& cfg, int T, Rng& rng);

// Edge probabilities before clamping; symmetric, diagonal left as computed.
// A null dropout stream disables dropout.
Var denoiser_forward(Tape& t, const ParamBinder& param, const DenoiserParams& params,
                     const Matrix& a_t, int step, Var guidance, Rng* dropout_rng);

// Symmetric, zero diagonal, off-diagonal clamped to [1e-6, 1 - 1e-6].
Matrix denoise_probs(const DenoiserParams& params, const Matrix& a_t, int step,
                     const RowVector& guidance);

struct DiffusionSample {
  int t = 1;
  Matrix a_prev;
  Matrix a_t;
};

// t ~ U[1, T], A^{t-1} ~ q(. | A^0), A^t ~ q(. | A^{t-1}).
DiffusionSample draw_training_sample(const Matrix& a0, const NoiseSchedule& sched, Rng& rng);

// Mean per-pair BCE of the denoiser against A^{t-1}, conditioned on the GIN
// embedding of the clean ego. With grads, weight * d(loss) is added to both
// stores.
double diffusion_loss(DenoiserParams& den, GinParams& gin, const EgoGraph& ego,
                      const DiffusionSample& sample, Rng& dropout_rng,
                      bool with_grads, double weight = 1.0);

double diffusion_train_step(DenoiserParams& den, GinParams& gin, const EgoGraph& ego,
                            const NoiseSchedule& sched, Rng& rng, double weight = 1.0);

struct DiffusionTrainConfig {
  int epochs = 300;
  int batch_size = 8;
  double lr = 1e-4;
  std::uint64_t seed = 0;
};

// Per-epoch mean training loss.
std::vector<double> train_diffusion(DenoiserParams& den, GinParams& gin,
                                    std::span<const EgoGraph> anomalous_egos,
                                    const NoiseSchedule& sched,
                                    const DiffusionTrainConfig& cfg);

struct ElboTerms {
  double recon = 0.0;
  double prior = 0.0;
  double con = 0.0;
  double recon_se = 0.0;
  double con_se = 0.0;
};

ElboTerms elbo_terms(const Matrix& a0, const RowVector& guidance,
                     const DenoiserParams& params, const NoiseSchedule& sched,
                     Rng& rng, int n_mc);

// Maps (A_t, t) to edge probabilities for the reverse chain.
using EdgeProbFn = std::function<Matrix(const Matrix& a_t, int t)>;

Matrix generate_adjacency(const EdgeProbFn& probs, Eigen::Index m,
                          const NoiseSchedule& sched, Rng& rng);
Matrix generate_adjacency(const DenoiserParams& params, const RowVector& guidance,
                          Eigen::Index m, const NoiseSchedule& sched, Rng& rng);

// Pool rows plus N(0, 1) noise; centre = highest degree (lowest index on
// ties) moved to index 0; isolated non-centre nodes dropped; label 1.
EgoGraph assemble_ego(const Matrix& adj, const Matrix& feature_pool, Rng& rng);
// As above, but the centre draws from center_pool and every other node from
// neighbor_pool.
EgoGraph assemble_ego(const Matrix& adj, const Matrix& center_pool, const Matrix& neighbor_pool,
                      Rng& rng);

std::string generated_ego_json(const EgoGraph& ego, std::uint64_t seed,
                               const RowVector& guidance, const NoiseSchedule& sched);

}  // namespace baed

#endif  // BAED_DIFFUSION_HPP_
