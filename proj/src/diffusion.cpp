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

#include "baed/diffusion.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace baed {

namespace {

void check_step(int t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.T) {
    throw Error(ErrorCode::kInvalidArgument,
                "step " + std::to_string(t) + " outside [1, " + std::to_string(sched.T) + "]");
  }
}

void check_adjacency(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + " must be square and nonempty");
  }
  if (!is_symmetric_binary(a)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " must be symmetric binary with zero diagonal");
  }
}

double clamp_prob(double p) { return std::clamp(p, kEdgeProbClamp, 1.0 - kEdgeProbClamp); }

double bernoulli_kl(double q, double p) {
  q = clamp_prob(q);
  p = clamp_prob(p);
  return q * std::log(q / p) + (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
}

Matrix symmetric_probs(Matrix probs) {
  probs.diagonal().setZero();
  return probs;
}

std::string blk(int s, const char* leaf) {
  return "blk." + std::to_string(s) + "." + leaf;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  const double n = static_cast<double>(xs.size());
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

}  // namespace

// --- schedule ----------------------------------------------------------------

std::string NoiseSchedule::digest() const {
  std::string s = "T=" + std::to_string(T);
  char buf[64];
  std::snprintf(buf, sizeof buf, ";p=%a", p);
  s += buf;
  for (int t = 1; t <= T; ++t) {
    std::snprintf(buf, sizeof buf, ";%a", beta[static_cast<std::size_t>(t)]);
    s += buf;
  }
  return hex64(fnv1a64(s));
}

NoiseSchedule make_schedule(std::vector<double> betas, double p, bool validate) {
  if (betas.empty()) throw Error(ErrorCode::kInvalidArgument, "schedule needs T >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "base rate p outside [0, 1]");
  NoiseSchedule s;
  s.T = static_cast<int>(betas.size());
  s.p = p;
  s.beta.assign(1, 0.0);
  s.alpha.assign(1, 1.0);
  s.alpha_bar.assign(1, 1.0);
  for (double b : betas) {
    if (validate ? !(b > 0.0 && b < 1.0) : !(b >= 0.0 && b <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "beta outside the allowed range");
    }
    s.beta.push_back(b);
    s.alpha.push_back(1.0 - b);
    s.alpha_bar.push_back(s.alpha_bar.back() * (1.0 - b));
  }
  if (validate && s.alpha_bar.back() > kMaxFinalAlphaBar) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "schedule does not reach the prior: alpha_bar_T = %.6g > %.2g",
                  s.alpha_bar.back(), kMaxFinalAlphaBar);
    throw Error(ErrorCode::kInvalidArgument, buf);
  }
  return s;
}

namespace {

std::vector<double> linear_betas(int T, double beta_start, double beta_end) {
  std::vector<double> b(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    b[static_cast<std::size_t>(i)] =
        T == 1 ? beta_end
               : beta_start + (beta_end - beta_start) * static_cast<double>(i) /
                                  static_cast<double>(T - 1);
  }
  return b;
}

double final_alpha_bar(const std::vector<double>& betas) {
  double a = 1.0;
  for (double b : betas) a *= 1.0 - b;
  return a;
}

}  // namespace

double required_beta_end(int T, double beta_start) {
  double lo = beta_start, hi = 1.0 - 1e-12;
  if (final_alpha_bar(linear_betas(T, beta_start, lo)) <= kMaxFinalAlphaBar) return lo;
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    if (final_alpha_bar(linear_betas(T, beta_start, mid)) <= kMaxFinalAlphaBar) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::ceil(hi * 1e6) / 1e6;
}

NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end, double p) {
  if (T < 1) throw Error(ErrorCode::kInvalidArgument, "schedule needs T >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "need 0 < beta_start <= beta_end < 1");
  }
  auto betas = linear_betas(T, beta_start, beta_end);
  if (final_alpha_bar(betas) > kMaxFinalAlphaBar) {
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "schedule does not reach the prior: alpha_bar_%d = %.6g > %.2g; "
                  "beta_end must be at least %.6g",
                  T, final_alpha_bar(betas), kMaxFinalAlphaBar,
                  required_beta_end(T, beta_start));
    throw Error(ErrorCode::kInvalidArgument, buf);
  }
  return make_schedule(std::move(betas), p);
}

// --- forward process ---------------------------------------------------------

Matrix q_sample_step(const Matrix& a_prev, int t, const NoiseSchedule& sched, Rng& rng) {
  check_step(t, sched);
  check_adjacency(a_prev, "A_prev");
  const double b = sched.beta[static_cast<std::size_t>(t)];
  Matrix probs = ((1.0 - b) * a_prev.array() + b * sched.p).matrix();
  return sample_bernoulli_matrix(rng, symmetric_probs(std::move(probs)), true);
}

Matrix q_sample_closed(const Matrix& a0, int t, const NoiseSchedule& sched, Rng& rng) {
  check_step(t, sched);
  check_adjacency(a0, "A0");
  const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
  Matrix probs = (ab * a0.array() + (1.0 - ab) * sched.p).matrix();
  return sample_bernoulli_matrix(rng, symmetric_probs(std::move(probs)), true);
}

double posterior_prob(int a_t, int a_0, int t, const NoiseSchedule& sched) {
  check_step(t, sched);
  if ((a_t != 0 && a_t != 1) || (a_0 != 0 && a_0 != 1)) {
    throw Error(ErrorCode::kInvalidArgument, "posterior bits must be 0 or 1");
  }
  const auto ti = static_cast<std::size_t>(t);
  const double b = sched.beta[ti];
  const double p = sched.p;
  // q(A^{t-1} = 1 | A^0) and q(A^t = a_t | A^{t-1} = x).
  const double prev_one = sched.alpha_bar[ti - 1] * a_0 + (1.0 - sched.alpha_bar[ti - 1]) * p;
  const double up_from_one = (1.0 - b) + b * p;
  const double up_from_zero = b * p;
  const double like_one = a_t ? up_from_one : 1.0 - up_from_one;
  const double like_zero = a_t ? up_from_zero : 1.0 - up_from_zero;
  const double num_one = like_one * prev_one;
  const double num_zero = like_zero * (1.0 - prev_one);
  const double den = num_one + num_zero;
  if (!(den > 0.0)) {
    throw Error(ErrorCode::kState, "posterior conditioned on a probability-zero event (a_t=" +
                                       std::to_string(a_t) + ", a_0=" + std::to_string(a_0) +
                                       ", t=" + std::to_string(t) + ")");
  }
  return num_one / den;
}

Matrix posterior_matrix(const Matrix& a_t, const Matrix& a0, int t, const NoiseSchedule& sched) {
  if (a_t.rows() != a0.rows() || a_t.cols() != a0.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "posterior_matrix: shapes");
  }
  double table[2][2];
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      // Probability-zero pairs cannot occur in valid inputs; mark them NaN.
      try {
        table[x][y] = posterior_prob(x, y, t, sched);
      } catch (const Error&) {
        table[x][y] = std::nan("");
      }
    }
  }
  Matrix out = Matrix::Zero(a_t.rows(), a_t.cols());
  for (Eigen::Index i = 0; i < a_t.rows(); ++i) {
    for (Eigen::Index j = 0; j < a_t.cols(); ++j) {
      if (i == j) continue;
      const double v = table[a_t(i, j) != 0.0][a0(i, j) != 0.0];
      if (std::isnan(v)) {
        throw Error(ErrorCode::kState, "posterior conditioned on a probability-zero event");
      }
      out(i, j) = v;
    }
  }
  return out;
}

// --- denoiser ----------------------------------------------------------------

DenoiserParams make_denoiser(const DenoiserConfig& cfg, int T, Rng& rng) {
  if (cfg.model_dim < 1 || cfg.heads < 1 || cfg.model_dim % cfg.heads != 0) {
    throw Error(ErrorCode::kInvalidArgument, "head count must divide the model dim");
  }
  if (cfg.blocks < 0 || cfg.ff_dim < 1 || cfg.n_max < 1 || cfg.guidance_dim < 1 || T < 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid denoiser configuration");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dropout outside [0, 1)");
  }
  DenoiserParams p;
  p.config = cfg;
  p.T = T;
  const int d = cfg.model_dim;
  p.time_table.resize(T, d);
  for (int t = 1; t <= T; ++t) {
    for (int i = 0; i < d; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / d);
      p.time_table(t - 1, i) = std::sin(t * freq);
      if (i + 1 < d) p.time_table(t - 1, i + 1) = std::cos(t * freq);
    }
  }
  auto& s = p.store;
  s.add("tok.deg.W", glorot(rng, 1, d));
  s.add("tok.b", Matrix::Zero(1, d));
  s.add("tok.time.W", glorot(rng, d, d));
  s.add("tok.guide.W", glorot(rng, cfg.guidance_dim, d));
  for (int b = 0; b < cfg.blocks; ++b) {
    for (const char* w : {"Wq", "Wk", "Wv", "Wo"}) s.add(blk(b, w), glorot(rng, d, d));
    s.add(blk(b, "adj_bias"), Matrix::Zero(1, cfg.heads));
    s.add(blk(b, "ff.W1"), glorot(rng, d, cfg.ff_dim));
    s.add(blk(b, "ff.b1"), Matrix::Zero(1, cfg.ff_dim));
    s.add(blk(b, "ff.W2"), glorot(rng, cfg.ff_dim, d));
    s.add(blk(b, "ff.b2"), Matrix::Zero(1, d));
  }
  s.add("edge.w1", glorot(rng, 1, d));
  s.add("edge.w2", glorot(rng, d, 1));
  s.add("edge.b", Matrix::Constant(1, 1, kEdgeBiasInit));
  s.add("edge.skip", Matrix::Constant(1, 1, kEdgeSkipInit));
  return p;
}

Var denoiser_forward(Tape& t, const ParamBinder& param, const DenoiserParams& params,
                     const Matrix& a_t, int step, Var guidance, Rng* dropout_rng) {
  const auto& cfg = params.config;
  const Eigen::Index m = a_t.rows();
  if (a_t.cols() != m || m < 1) throw Error(ErrorCode::kShapeMismatch, "A_t must be square");
  if (m > cfg.n_max) {
    throw Error(ErrorCode::kInvalidArgument, "ego of " + std::to_string(m) +
                                                 " nodes exceeds n_max " +
                                                 std::to_string(cfg.n_max));
  }
  if (step < 1 || step > params.T) {
    throw Error(ErrorCode::kInvalidArgument, "step outside [1, T]");
  }
  if (t.value(guidance).rows() != 1 || t.value(guidance).cols() != cfg.guidance_dim) {
    throw Error(ErrorCode::kShapeMismatch, "guidance width != " + std::to_string(cfg.guidance_dim));
  }
  const int d = cfg.model_dim;
  const int dk = d / cfg.heads;
  const double rate = dropout_rng ? cfg.dropout : 0.0;

  Var deg = t.constant(a_t.rowwise().sum() / std::sqrt(static_cast<double>(cfg.n_max)));
  Var time_row = t.constant(params.time_table.row(step - 1));
  Var shared = add(t, param("tok.b"),
                   add(t, matmul(t, time_row, param("tok.time.W")),
                       matmul(t, guidance, param("tok.guide.W"))));
  Var z = add_row(t, matmul(t, deg, param("tok.deg.W")), shared);

  for (int b = 0; b < cfg.blocks; ++b) {
    Var zn = layer_norm_rows(t, z);
    Var q = matmul(t, zn, param(blk(b, "Wq")));
    Var k = matmul(t, zn, param(blk(b, "Wk")));
    Var v = matmul(t, zn, param(blk(b, "Wv")));
    Var bias = param(blk(b, "adj_bias"));
    std::vector<Var> heads;
    for (int h = 0; h < cfg.heads; ++h) {
      Var qh = slice_cols(t, q, h * dk, dk);
      Var kh = slice_cols(t, k, h * dk, dk);
      Var vh = slice_cols(t, v, h * dk, dk);
      Var scores = scale(t, matmul(t, qh, transpose(t, kh)), 1.0 / std::sqrt(dk));
      scores = add_scaled(t, scores, slice_cols(t, bias, h, 1), a_t);
      heads.push_back(matmul(t, softmax_rows(t, scores), vh));
    }
    Var attn = matmul(t, concat_cols(t, heads), param(blk(b, "Wo")));
    if (rate > 0.0) attn = dropout(t, attn, rate, *dropout_rng);
    z = add(t, z, attn);
    Var ff = relu(t, add_row(t, matmul(t, layer_norm_rows(t, z), param(blk(b, "ff.W1"))),
                             param(blk(b, "ff.b1"))));
    ff = add_row(t, matmul(t, ff, param(blk(b, "ff.W2"))), param(blk(b, "ff.b2")));
    if (rate > 0.0) ff = dropout(t, ff, rate, *dropout_rng);
    z = add(t, z, ff);
  }

  // w1 . (z_i * z_j) + w2 . (z_i + z_j) + b, plus a learned pass-through of A_t.
  z = layer_norm_rows(t, z);
  Var bilinear = matmul(t, scale_cols(t, z, param("edge.w1")), transpose(t, z));
  Var logits = add(t, bilinear, outer_sum(t, matmul(t, z, param("edge.w2"))));
  logits = add_scaled(t, logits, param("edge.b"), Matrix::Ones(m, m));
  logits = add_scaled(t, logits, param("edge.skip"), a_t);
  return sigmoid(t, logits);
}

Matrix denoise_probs(const DenoiserParams& params, const Matrix& a_t, int step,
                     const RowVector& guidance) {
  Tape t(false);
  const Matrix g = guidance;
  Var probs = denoiser_forward(t, bind_params(t, params.store), params, a_t, step,
                               t.input(g), nullptr);
  Matrix out = t.value(probs).unaryExpr([](double p) { return clamp_prob(p); });
  out = (0.5 * (out + out.transpose())).eval();
  out.diagonal().setZero();
  return out;
}

// --- training ----------------------------------------------------------------

DiffusionSample draw_training_sample(const Matrix& a0, const NoiseSchedule& sched, Rng& rng) {
  DiffusionSample s;
  s.t = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(sched.T)));
  s.a_prev = s.t == 1 ? a0 : q_sample_closed(a0, s.t - 1, sched, rng);
  s.a_t = q_sample_step(s.a_prev, s.t, sched, rng);
  return s;
}

double diffusion_loss(DenoiserParams& den, GinParams& gin, const EgoGraph& ego,
                      const DiffusionSample& sample, Rng& dropout_rng, bool with_grads,
                      double weight) {
  if (ego.label != Label::kAnomalous) {
    throw Error(ErrorCode::kInvalidArgument, "diffusion trains on anomalous egos only");
  }
  const Eigen::Index m = ego.size();
  if (m < 2) return 0.0;
  Tape t(with_grads);
  Var g = gin_encode(t, bind_params(t, gin.store), gin, ego);
  Var probs = denoiser_forward(t, bind_params(t, den.store), den, sample.a_t, sample.t, g,
                               &dropout_rng);
  Matrix upper = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) upper(i, j) = 1.0;
  Var loss = bce(t, probs, sample.a_prev, upper, kEdgeProbClamp);
  if (with_grads) t.backward(loss, Matrix::Constant(1, 1, weight));
  return t.value(loss)(0, 0);
}

double diffusion_train_step(DenoiserParams& den, GinParams& gin, const EgoGraph& ego,
                            const NoiseSchedule& sched, Rng& rng, double weight) {
  const auto sample = draw_training_sample(ego.adjacency, sched, rng);
  return diffusion_loss(den, gin, ego, sample, rng, true, weight);
}

std::vector<double> train_diffusion(DenoiserParams& den, GinParams& gin,
                                    std::span<const EgoGraph> anomalous_egos,
                                    const NoiseSchedule& sched,
                                    const DiffusionTrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "diffusion training needs epochs >= 1, batch >= 1");
  }
  if (den.T != sched.T) throw Error(ErrorCode::kInvalidArgument, "denoiser and schedule T differ");
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < anomalous_egos.size(); ++i) {
    if (anomalous_egos[i].label != Label::kAnomalous) {
      throw Error(ErrorCode::kInvalidArgument, "diffusion trains on anomalous egos only");
    }
    if (anomalous_egos[i].size() >= 2) usable.push_back(i);
  }
  if (usable.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no anomalous ego with at least 2 nodes");
  }
  AdamState den_opt, gin_opt;
  std::vector<double> history;
  const Rng root(cfg.seed, "diffusion-train", 0);
  std::uint64_t counter = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    Rng order_rng = root.stream("epoch", static_cast<std::uint64_t>(e));
    std::vector<std::size_t> order = usable;
    order_rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double w = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        Rng sample_rng = root.stream("sample", counter++);
        total += diffusion_train_step(den, gin, anomalous_egos[order[i]], sched, sample_rng, w);
      }
      adam_step(den.store, den_opt, cfg.lr);
      adam_step(gin.store, gin_opt, cfg.lr);
    }
    history.push_back(total / static_cast<double>(order.size()));
  }
  return history;
}

// --- diagnostics -------------------------------------------------------------

ElboTerms elbo_terms(const Matrix& a0, const RowVector& guidance, const DenoiserParams& params,
                     const NoiseSchedule& sched, Rng& rng, int n_mc) {
  if (n_mc < 1) throw Error(ErrorCode::kInvalidArgument, "n_mc must be >= 1");
  check_adjacency(a0, "A0");
  const Eigen::Index m = a0.rows();
  ElboTerms out;

  const double ab_t = sched.alpha_bar[static_cast<std::size_t>(sched.T)];
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      out.prior += bernoulli_kl(ab_t * a0(i, j) + (1.0 - ab_t) * sched.p, sched.p);

  std::vector<double> recon(static_cast<std::size_t>(n_mc)), con(static_cast<std::size_t>(n_mc));
  for (int s = 0; s < n_mc; ++s) {
    const Matrix a1 = q_sample_closed(a0, 1, sched, rng);
    const Matrix p1 = denoise_probs(params, a1, 1, guidance);
    double r = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j)
        r -= a0(i, j) != 0.0 ? std::log(p1(i, j)) : std::log(1.0 - p1(i, j));
    recon[static_cast<std::size_t>(s)] = r;

    double c = 0.0;
    for (int t = 2; t <= sched.T; ++t) {
      const Matrix at = q_sample_closed(a0, t, sched, rng);
      const Matrix post = posterior_matrix(at, a0, t, sched);
      const Matrix phat = denoise_probs(params, at, t, guidance);
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) c += bernoulli_kl(post(i, j), phat(i, j));
    }
    con[static_cast<std::size_t>(s)] = c;
  }
  const auto r = mean_se(recon);
  const auto c = mean_se(con);
  out.recon = r.mean;
  out.recon_se = r.se;
  out.con = c.mean;
  out.con_se = c.se;
  return out;
}

// --- generation --------------------------------------------------------------

Matrix generate_adjacency(const EdgeProbFn& probs, Eigen::Index m, const NoiseSchedule& sched,
                          Rng& rng) {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "generated graph needs m >= 1");
  Matrix a = sample_bernoulli_matrix(rng, symmetric_probs(Matrix::Constant(m, m, sched.p)), true);
  for (int t = sched.T; t >= 1; --t) {
    Matrix p = probs(a, t);
    if (p.rows() != m || p.cols() != m) {
      throw Error(ErrorCode::kShapeMismatch, "edge probability matrix has the wrong shape");
    }
    a = sample_bernoulli_matrix(rng, symmetric_probs(std::move(p)), true);
  }
  return a;
}

Matrix generate_adjacency(const DenoiserParams& params, const RowVector& guidance,
                          Eigen::Index m, const NoiseSchedule& sched, Rng& rng) {
  if (params.T != sched.T) throw Error(ErrorCode::kInvalidArgument, "denoiser and schedule T differ");
  if (m > params.config.n_max) {
    throw Error(ErrorCode::kInvalidArgument, "m exceeds n_max " + std::to_string(params.config.n_max));
  }
  return generate_adjacency(
      [&](const Matrix& a_t, int t) { return denoise_probs(params, a_t, t, guidance); }, m, sched,
      rng);
}

EgoGraph assemble_ego(const Matrix& adj, const Matrix& feature_pool, Rng& rng) {
  return assemble_ego(adj, feature_pool, feature_pool, rng);
}

EgoGraph assemble_ego(const Matrix& adj, const Matrix& center_pool, const Matrix& neighbor_pool,
                      Rng& rng) {
  if (center_pool.rows() < 1 || neighbor_pool.rows() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "empty feature pool");
  }
  if (center_pool.cols() != neighbor_pool.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "feature pools differ in width");
  }
  check_adjacency(adj, "adjacency");
  const ColVector deg = adj.rowwise().sum();
  Eigen::Index center = 0;
  for (Eigen::Index i = 1; i < deg.size(); ++i)
    if (deg(i) > deg(center)) center = i;
  std::vector<Eigen::Index> keep{center};
  if (deg(center) > 0.0) {
    for (Eigen::Index i = 0; i < deg.size(); ++i)
      if (i != center && deg(i) > 0.0) keep.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  EgoGraph ego;
  ego.adjacency.resize(m, m);
  ego.features.resize(m, center_pool.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j)
      ego.adjacency(i, j) = adj(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
    const Matrix& feature_pool = i == 0 ? center_pool : neighbor_pool;
    const auto src = static_cast<Eigen::Index>(
        rng.uniform_index(static_cast<std::uint64_t>(feature_pool.rows())));
    for (Eigen::Index c = 0; c < feature_pool.cols(); ++c)
      ego.features(i, c) = feature_pool(src, c) + rng.normal();
  }
  ego.label = Label::kAnomalous;
  ego.hops = 1;
  return ego;
}

std::string generated_ego_json(const EgoGraph& ego, std::uint64_t seed, const RowVector& guidance,
                               const NoiseSchedule& sched) {
  nlohmann::ordered_json j;
  j["m"] = ego.size();
  auto edges = nlohmann::json::array();
  for (Eigen::Index i = 0; i < ego.size(); ++i)
    for (Eigen::Index k = i + 1; k < ego.size(); ++k)
      if (ego.adjacency(i, k) != 0.0) edges.push_back({i, k});
  j["edges"] = edges;
  auto feats = nlohmann::json::array();
  for (Eigen::Index i = 0; i < ego.features.rows(); ++i) {
    std::vector<double> row(ego.features.row(i).begin(), ego.features.row(i).end());
    feats.push_back(row);
  }
  j["features"] = feats;
  j["center"] = 0;
  j["label"] = 1;
  const std::string_view bytes(reinterpret_cast<const char*>(guidance.data()),
                               static_cast<std::size_t>(guidance.size()) * sizeof(double));
  j["provenance"] = {{"seed", seed},
                     {"guidance_checksum", hex64(fnv1a64(bytes))},
                     {"schedule_digest", sched.digest()}};
  return j.dump();
}

}  // namespace baed
