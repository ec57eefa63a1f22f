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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "baed/diffusion.hpp"
#include "baed/gradcheck.hpp"
#include "oracles.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace baed;

namespace {

Matrix random_adjacency(Rng& rng, Eigen::Index m, double p) {
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      if (rng.bernoulli(p)) a(i, j) = a(j, i) = 1.0;
  return a;
}

DenoiserConfig tiny_config(int guidance_dim) {
  DenoiserConfig c;
  c.model_dim = 8;
  c.heads = 2;
  c.blocks = 1;
  c.ff_dim = 16;
  c.n_max = 8;
  c.guidance_dim = guidance_dim;
  return c;
}

EgoGraph anomalous_ego(const Matrix& adj, const Matrix& x) {
  EgoGraph e;
  e.adjacency = adj;
  e.features = x;
  e.label = Label::kAnomalous;
  e.hops = 1;
  return e;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("noise schedules") {
  auto s = make_schedule({0.1, 0.2, 0.3, 0.4}, 0.0, false);
  const double expect[] = {1.0, 0.9, 0.72, 0.504, 0.3024};
  for (int t = 0; t <= 4; ++t) CHECK(s.alpha_bar[static_cast<std::size_t>(t)] == doctest::Approx(expect[t]).epsilon(1e-15));
  CHECK_THROWS_AS(make_schedule({0.1, 0.2, 0.3, 0.4}), Error);

  auto one = make_schedule({0.999});
  CHECK(one.alpha_bar[1] == doctest::Approx(0.001).epsilon(1e-12));

  // Independent product oracle in extended precision.
  auto def = make_linear_schedule();
  CHECK(def.T == 128);
  long double prod = 1.0L;
  for (int i = 0; i < 128; ++i) prod *= 1.0L - (1e-4L + (0.2L - 1e-4L) * i / 127.0L);
  CHECK(static_cast<double>(prod) == doctest::Approx(def.alpha_bar[128]).epsilon(1e-12));
  CHECK(def.alpha_bar[128] <= 0.01);
  CHECK(def.beta[1] == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(def.beta[128] == doctest::Approx(0.2).epsilon(1e-15));
  for (int t = 1; t <= 128; ++t) CHECK(def.alpha_bar[static_cast<std::size_t>(t)] < def.alpha_bar[static_cast<std::size_t>(t - 1)]);

  // The conventional 1000-step end point does not reach the prior at T = 128.
  try {
    make_linear_schedule(128, 1e-4, 0.02);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("beta_end must be at least") != std::string::npos);
  }
  const double need = required_beta_end(16, 1e-4);
  CHECK_NOTHROW(make_linear_schedule(16, 1e-4, need));
  CHECK_THROWS_AS(make_linear_schedule(16, 1e-4, need - 1e-4), Error);
  CHECK_THROWS_AS(make_linear_schedule(0), Error);
  CHECK_THROWS_AS(make_linear_schedule(8, 0.3, 0.2), Error);
  CHECK(def.digest() == make_linear_schedule().digest());
  CHECK(def.digest() != make_linear_schedule(128, 1e-4, 0.21).digest());
}

TEST_CASE("q_sample_step: boundary steps and frequency") {
  Rng rng(1);
  const Matrix a = random_adjacency(rng, 6, 0.5);
  auto frozen = make_schedule({0.0, 1.0}, 0.0, false);
  CHECK(q_sample_step(a, 1, frozen, rng) == a);
  CHECK(q_sample_step(a, 2, frozen, rng).isZero(0.0));

  auto half = make_schedule({0.5}, 0.0, false);
  Matrix full(2, 2);
  full << 0, 1, 1, 0;
  const int n = 10000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += q_sample_step(full, 1, half, rng)(0, 1) != 0.0;
  const double se = std::sqrt(0.25 / n);
  CHECK(std::abs(hits / static_cast<double>(n) - 0.5) < 3 * se);
  CHECK_THROWS_AS(q_sample_step(full, 2, half, rng), Error);
}

TEST_CASE("q_sample_closed: absorbing zero and marginal") {
  Rng rng(2);
  auto sched = make_schedule({0.5, 0.5}, 0.0, false);  // alpha_bar_2 = 0.25
  Matrix full(2, 2);
  full << 0, 1, 1, 0;
  const int n = 20000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    CHECK(q_sample_closed(Matrix::Zero(2, 2), 2, sched, rng).isZero(0.0));
    hits += q_sample_closed(full, 2, sched, rng)(0, 1) != 0.0;
  }
  CHECK(std::abs(hits / static_cast<double>(n) - 0.25) < 3 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("step-wise and closed-form sampling share per-edge marginals") {
  for (double p : {0.0, 0.1}) {
    auto sched = make_linear_schedule(128, 1e-4, 0.2, p);
    Rng rng(3);
    const Matrix a0 = random_adjacency(rng, 8, 0.4);
    const int chains = 4000;
    for (int t : {1, 4, 16}) {
      Matrix step_freq = Matrix::Zero(8, 8), closed_freq = Matrix::Zero(8, 8);
      for (int c = 0; c < chains; ++c) {
        Matrix a = a0;
        for (int s = 1; s <= t; ++s) a = q_sample_step(a, s, sched, rng);
        step_freq += a;
        closed_freq += q_sample_closed(a0, t, sched, rng);
      }
      step_freq /= chains;
      closed_freq /= chains;
      const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
      int misses = 0;
      for (int i = 0; i < 8; ++i) {
        for (int j = i + 1; j < 8; ++j) {
          const double q = ab * a0(i, j) + (1.0 - ab) * p;
          const double se = std::sqrt(std::max(q * (1.0 - q), 1e-12) / chains);
          misses += std::abs(step_freq(i, j) - q) > 3 * se;
          misses += std::abs(closed_freq(i, j) - q) > 3 * se;
        }
      }
      // 56 comparisons at the 3-sigma level: allow one chance exceedance.
      CHECK(misses <= 1);
    }
  }
}

TEST_CASE("absent edges stay absent when p = 0") {
  auto sched = make_linear_schedule(32, 1e-4, required_beta_end(32, 1e-4));
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const Matrix a0 = random_adjacency(rng, 5, 0.3);
    Matrix a = a0;
    for (int t = 1; t <= sched.T; ++t) {
      a = q_sample_step(a, t, sched, rng);
      REQUIRE(((a.array() > 0) && (a0.array() == 0)).count() == 0);
    }
  }
}

TEST_CASE("posterior_prob") {
  auto halves = make_schedule({0.5, 0.5}, 0.0, false);
  CHECK(posterior_prob(0, 1, 2, halves) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  for (int t = 1; t <= 2; ++t) {
    CHECK(posterior_prob(1, 1, t, halves) == 1.0);
    CHECK(posterior_prob(0, 0, t, halves) == 0.0);
    CHECK_THROWS_AS(posterior_prob(1, 0, t, halves), Error);
  }
  for (double p : {0.0, 0.1, 0.5}) {
    auto sched = make_linear_schedule(128, 1e-4, 0.2, p);
    double worst = 0.0;
    for (int t = 1; t <= 128; ++t) {
      for (int at = 0; at < 2; ++at) {
        for (int a0 = 0; a0 < 2; ++a0) {
          if (p == 0.0 && at == 1 && a0 == 0) continue;
          worst = std::max(worst, std::abs(posterior_prob(at, a0, t, sched) -
                                           oracle::posterior(at, a0, t, sched)));
        }
      }
    }
    CHECK(worst <= 1e-12);
  }
  // t = 1 recovers A^0 exactly.
  auto sched = make_linear_schedule(8, 1e-4, 0.8, 0.3);
  for (int at = 0; at < 2; ++at) {
    CHECK(posterior_prob(at, 1, 1, sched) == 1.0);
    CHECK(posterior_prob(at, 0, 1, sched) == 0.0);
  }
  CHECK_THROWS_AS(posterior_prob(2, 0, 1, sched), Error);
  CHECK_THROWS_AS(posterior_prob(0, 0, 9, sched), Error);
}

TEST_CASE("prior independence of the default schedule") {
  auto sched = make_linear_schedule();
  const double ab = sched.alpha_bar[128];
  const double from_full = ab * 1.0 + (1.0 - ab) * sched.p;
  const double from_empty = (1.0 - ab) * sched.p;
  CHECK(std::abs(from_full - from_empty) == doctest::Approx(ab).epsilon(1e-15));
  CHECK(std::abs(from_full - from_empty) <= 0.01);
}

TEST_CASE("denoise_probs: structure") {
  Rng rng(4);
  auto den = make_denoiser(tiny_config(4), 8, rng);
  SUBCASE("zero parameters give one half") {
    for (auto& [name, param] : den.store) param.value.setZero();
    const Matrix p = denoise_probs(den, random_adjacency(rng, 5, 0.5), 3, RowVector::Ones(4));
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) CHECK(p(i, j) == (i == j ? 0.0 : 0.5));
  }
  SUBCASE("symmetric, zero diagonal, clamped") {
    for (int c = 0; c < 100; ++c) {
      for (auto& [name, param] : den.store) param.value = sample_gaussian_matrix(rng, param.value.rows(), param.value.cols(), 0, 1.5);
      const auto m = 1 + static_cast<Eigen::Index>(rng.uniform_index(8));
      const Matrix p = denoise_probs(den, random_adjacency(rng, m, 0.5),
                                     1 + static_cast<int>(rng.uniform_index(8)),
                                     sample_gaussian_matrix(rng, 1, 4, 0, 1));
      CHECK(p == p.transpose());
      CHECK(p.diagonal().isZero(0.0));
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          if (i != j) CHECK((p(i, j) >= kEdgeProbClamp && p(i, j) <= 1.0 - kEdgeProbClamp));
    }
  }
  SUBCASE("permutation equivariance") {
    for (int c = 0; c < 20; ++c) {
      const Eigen::Index m = 6;
      const Matrix a = random_adjacency(rng, m, 0.5);
      const RowVector g = sample_gaussian_matrix(rng, 1, 4, 0, 1);
      std::vector<Eigen::Index> perm(m);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm.begin(), perm.end());
      Eigen::PermutationMatrix<Eigen::Dynamic> pm(m);
      for (Eigen::Index i = 0; i < m; ++i) pm.indices()(i) = static_cast<int>(perm[static_cast<std::size_t>(i)]);
      const Matrix pa = pm * a * pm.transpose();
      const Matrix lhs = denoise_probs(den, pa, 5, g);
      const Matrix rhs = pm * denoise_probs(den, a, 5, g) * pm.transpose();
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("input checks") {
    CHECK_THROWS_AS(denoise_probs(den, Matrix::Zero(9, 9), 1, RowVector::Zero(4)), Error);
    CHECK_THROWS_AS(denoise_probs(den, Matrix::Zero(3, 3), 0, RowVector::Zero(4)), Error);
    CHECK_THROWS_AS(denoise_probs(den, Matrix::Zero(3, 3), 1, RowVector::Zero(5)), Error);
    DenoiserConfig bad = tiny_config(4);
    bad.heads = 3;
    CHECK_THROWS_AS(make_denoiser(bad, 8, rng), Error);
  }
}

TEST_CASE("draw_training_sample") {
  Rng rng(5);
  const Matrix a0 = random_adjacency(rng, 6, 0.5);
  auto t1 = make_schedule({0.999});
  for (int i = 0; i < 20; ++i) {
    const auto s = draw_training_sample(a0, t1, rng);
    CHECK(s.t == 1);
    CHECK(s.a_prev == a0);
    CHECK(((s.a_t.array() > 0) && (a0.array() == 0)).count() == 0);
  }
  auto sched = make_linear_schedule(16, 1e-4, required_beta_end(16, 1e-4));
  std::vector<int> seen(17, 0);
  for (int i = 0; i < 2000; ++i) ++seen[static_cast<std::size_t>(draw_training_sample(a0, sched, rng).t)];
  CHECK(seen[0] == 0);
  for (int t = 1; t <= 16; ++t) CHECK(seen[static_cast<std::size_t>(t)] > 60);
}

TEST_CASE("diffusion_loss: gradients reach denoiser and GIN") {
  Rng rng(6);
  auto den = make_denoiser(tiny_config(4), 8, rng);
  auto gin = make_gin(3, GinConfig{2, 4}, rng);
  for (auto& [name, param] : den.store)
    if (param.value.isZero(0.0)) param.value = sample_gaussian_matrix(rng, param.value.rows(), param.value.cols(), 0, 0.3);
  for (auto& [name, param] : gin.store)
    if (param.value.isZero(0.0)) param.value = sample_gaussian_matrix(rng, param.value.rows(), param.value.cols(), 0, 0.3);
  Matrix a(4, 4);
  a << 0, 1, 1, 0, 1, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0;
  const auto ego = anomalous_ego(a, sample_gaussian_matrix(rng, 4, 3, 0, 1));
  auto sched = make_linear_schedule(8, 1e-4, 0.8);
  const DiffusionSample sample{5, a, q_sample_step(a, 5, sched, rng)};
  const Rng dropout_seed(77);
  auto loss = [&](bool with_grads) {
    Rng d = dropout_seed;
    return diffusion_loss(den, gin, ego, sample, d, with_grads);
  };
  const auto report = gradient_check({&den.store, &gin.store}, loss);
  INFO(report.worst_param << "[" << report.worst_index << "] " << report.worst_analytic << " vs "
                          << report.worst_numeric);
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-4);

  EgoGraph normal = ego;
  normal.label = Label::kNormal;
  Rng d(1);
  CHECK_THROWS_AS(diffusion_loss(den, gin, normal, sample, d, false), Error);
}

TEST_CASE("diffusion training overfits a single ego") {
  Rng rng(7);
  DenoiserConfig cfg = tiny_config(8);
  cfg.model_dim = 16;
  cfg.dropout = 0.0;
  auto sched = make_linear_schedule(8, 1e-4, required_beta_end(8, 1e-4));
  auto den = make_denoiser(cfg, sched.T, rng);
  auto gin = make_gin(2, GinConfig{2, 8}, rng);
  Matrix a(6, 6);
  a << 0, 1, 1, 1, 0, 0,
       1, 0, 1, 0, 0, 0,
       1, 1, 0, 1, 1, 0,
       1, 0, 1, 0, 0, 1,
       0, 0, 1, 0, 0, 1,
       0, 0, 0, 1, 1, 0;
  const auto ego = anomalous_ego(a, sample_gaussian_matrix(rng, 6, 2, 0, 1));
  std::vector<DiffusionSample> samples;
  for (int t = 1; t <= sched.T; ++t) {
    DiffusionSample s;
    s.t = t;
    s.a_prev = t == 1 ? a : q_sample_closed(a, t - 1, sched, rng);
    s.a_t = q_sample_step(s.a_prev, t, sched, rng);
    samples.push_back(s);
  }
  auto mean_loss = [&] {
    double total = 0.0;
    for (const auto& s : samples) {
      Rng d(0);
      total += diffusion_loss(den, gin, ego, s, d, false);
    }
    return total / static_cast<double>(samples.size());
  };
  const double before = mean_loss();
  AdamState den_opt, gin_opt;
  for (int step = 0; step < 300; ++step) {
    Rng d(static_cast<std::uint64_t>(step));
    diffusion_loss(den, gin, ego, samples[static_cast<std::size_t>(step) % samples.size()], d, true);
    adam_step(den.store, den_opt, 3e-3);
    adam_step(gin.store, gin_opt, 3e-3);
  }
  const double after = mean_loss();
  INFO("before " << before << " after " << after);
  CHECK(after <= 0.7 * before);
}

TEST_CASE("train_diffusion is deterministic and reduces loss") {
  Rng rng(8);
  auto sched = make_linear_schedule(4, 1e-4, required_beta_end(4, 1e-4));
  std::vector<EgoGraph> egos;
  for (int i = 0; i < 6; ++i) {
    Matrix clique = Matrix::Ones(5, 5);
    clique.diagonal().setZero();
    egos.push_back(anomalous_ego(clique, sample_gaussian_matrix(rng, 5, 2, 1, 1)));
  }
  egos.push_back(anomalous_ego(Matrix::Zero(1, 1), Matrix::Zero(1, 2)));
  DenoiserConfig cfg = tiny_config(4);
  DiffusionTrainConfig tc{40, 3, 3e-3, 11};
  auto run = [&] {
    Rng init(9);
    auto den = make_denoiser(cfg, sched.T, init);
    auto gin = make_gin(2, GinConfig{1, 4}, init);
    return train_diffusion(den, gin, egos, sched, tc);
  };
  const auto h1 = run();
  const auto h2 = run();
  CHECK(h1 == h2);
  REQUIRE(h1.size() == 40);
  const double head = (h1[0] + h1[1] + h1[2]) / 3.0;
  const double tail = (h1[37] + h1[38] + h1[39]) / 3.0;
  CHECK(tail < head);

  std::vector<EgoGraph> lonely{anomalous_ego(Matrix::Zero(1, 1), Matrix::Zero(1, 2))};
  Rng init(9);
  auto den = make_denoiser(cfg, sched.T, init);
  auto gin = make_gin(2, GinConfig{1, 4}, init);
  CHECK_THROWS_AS(train_diffusion(den, gin, lonely, sched, tc), Error);
}

TEST_CASE("elbo_terms") {
  Rng rng(10);
  auto den = make_denoiser(tiny_config(4), 2, rng);
  den.store.at("edge.skip").value(0, 0) = 1.5;
  den.store.at("edge.b").value(0, 0) = -0.4;
  const RowVector g = sample_gaussian_matrix(rng, 1, 4, 0, 1);
  Matrix a0(2, 2);
  a0 << 0, 1, 1, 0;

  SUBCASE("single step has no consistency term") {
    auto den1 = make_denoiser(tiny_config(4), 1, rng);
    auto s1 = make_schedule({0.999});
    const auto e = elbo_terms(a0, g, den1, s1, rng, 20);
    CHECK(e.con == 0.0);
    CHECK(e.con_se == 0.0);
  }
  SUBCASE("prior term does not depend on the denoiser") {
    auto s = make_schedule({0.3, 0.99});
    auto other = make_denoiser(tiny_config(4), 2, rng);
    const double expect = [&] {
      const double q = std::clamp(s.alpha_bar[2], 1e-6, 1 - 1e-6);
      const double p = 1e-6;
      return q * std::log(q / p) + (1 - q) * std::log((1 - q) / (1 - p));
    }();
    CHECK(elbo_terms(a0, g, den, s, rng, 3).prior == doctest::Approx(expect).epsilon(1e-12));
    CHECK(elbo_terms(a0, g, other, s, rng, 3).prior == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("Monte Carlo agrees with exhaustive trajectories") {
    auto s = make_schedule({0.3, 0.99});
    Matrix on = a0, off = Matrix::Zero(2, 2);
    auto phat = [&](const Matrix& a, int t) { return denoise_probs(den, a, t, g)(0, 1); };
    auto kl = [](double q, double p) {
      q = std::clamp(q, 1e-6, 1 - 1e-6);
      p = std::clamp(p, 1e-6, 1 - 1e-6);
      return q * std::log(q / p) + (1 - q) * std::log((1 - q) / (1 - p));
    };
    // A0 has the edge; p = 0 so q(A^t = 1 | A^0) = alpha_bar_t.
    const double q1 = s.alpha_bar[1], q2 = s.alpha_bar[2];
    const double recon = q1 * -std::log(phat(on, 1)) + (1 - q1) * -std::log(phat(off, 1));
    const double con = q2 * kl(posterior_prob(1, 1, 2, s), phat(on, 2)) +
                       (1 - q2) * kl(posterior_prob(0, 1, 2, s), phat(off, 2));
    const auto e = elbo_terms(a0, g, den, s, rng, 50000);
    INFO("recon " << e.recon << " vs " << recon << " se " << e.recon_se);
    INFO("con " << e.con << " vs " << con << " se " << e.con_se);
    CHECK(std::abs(e.recon - recon) <= 3 * e.recon_se);
    CHECK(std::abs(e.con - con) <= 3 * e.con_se);
    CHECK(e.recon_se > 0.0);
  }
  CHECK_THROWS_AS(elbo_terms(a0, g, den, make_schedule({0.3, 0.99}), rng, 0), Error);
}

TEST_CASE("generate_adjacency") {
  auto sched = make_linear_schedule(6, 1e-4, 0.9);
  Rng rng(11);
  const auto zeros = generate_adjacency([](const Matrix& a, int) { return Matrix::Zero(a.rows(), a.cols()).eval(); }, 7, sched, rng);
  CHECK(zeros.isZero(0.0));
  const auto ones = generate_adjacency([](const Matrix& a, int) { return Matrix::Ones(a.rows(), a.cols()).eval(); }, 7, sched, rng);
  CHECK(ones.sum() == 42.0);
  CHECK(ones.diagonal().isZero(0.0));

  std::vector<int> steps;
  generate_adjacency([&](const Matrix& a, int t) { steps.push_back(t); return Matrix::Zero(a.rows(), a.cols()).eval(); }, 3, sched, rng);
  CHECK(steps == std::vector<int>{6, 5, 4, 3, 2, 1});

  auto den = make_denoiser(tiny_config(4), sched.T, rng);
  const RowVector g = sample_gaussian_matrix(rng, 1, 4, 0, 1);
  Rng r1(5), r2(5);
  const Matrix x = generate_adjacency(den, g, 6, sched, r1);
  CHECK(x == generate_adjacency(den, g, 6, sched, r2));
  CHECK(is_symmetric_binary(x));
  CHECK_THROWS_AS(generate_adjacency(den, g, 9, sched, r1), Error);
  CHECK_THROWS_AS(generate_adjacency(den, g, 4, make_linear_schedule(7, 1e-4, 0.9), r1), Error);
}

TEST_CASE("assemble_ego") {
  Rng rng(12);
  const Matrix pool = sample_gaussian_matrix(rng, 4, 3, 0, 1);
  const auto lone = assemble_ego(Matrix::Zero(5, 5), pool, rng);
  CHECK(lone.size() == 1);
  CHECK(lone.label == Label::kAnomalous);

  Matrix star = Matrix::Zero(6, 6);
  for (int leaf : {0, 1, 4}) star(3, leaf) = star(leaf, 3) = 1.0;
  const auto s = assemble_ego(star, pool, rng);
  REQUIRE(s.size() == 4);
  CHECK(s.adjacency.row(0).sum() == 3.0);
  CHECK(s.edge_count() == 3);
  CHECK(s.synthetic());

  // Ties on degree go to the lowest index.
  Matrix pair = Matrix::Zero(3, 3);
  pair(1, 2) = pair(2, 1) = 1.0;
  const auto pr = assemble_ego(pair, pool, rng);
  CHECK(pr.size() == 2);
  CHECK(pr.adjacency(0, 1) == 1.0);

  CHECK_THROWS_AS(assemble_ego(star, Matrix(0, 3), rng), Error);
}

TEST_CASE("assemble_ego: feature noise is standard normal") {
  Rng rng(13);
  Matrix pool(1, 1);
  pool << 2.5;
  Matrix edge(2, 2);
  edge << 0, 1, 1, 0;
  std::vector<double> z;
  while (z.size() < 10000) {
    const auto e = assemble_ego(edge, pool, rng);
    for (Eigen::Index i = 0; i < e.size(); ++i) z.push_back(e.features(i, 0) - 2.5);
  }
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  // Asymptotic Kolmogorov-Smirnov critical value at the 0.01 level.
  CHECK(d < 1.6276 / std::sqrt(n));
}

TEST_CASE("generated ego JSON") {
  Rng rng(14);
  Matrix tri = Matrix::Ones(3, 3);
  tri.diagonal().setZero();
  const auto e = assemble_ego(tri, Matrix::Zero(2, 2), rng);
  auto sched = make_linear_schedule(6, 1e-4, 0.9);
  const auto j = nlohmann::json::parse(generated_ego_json(e, 42, RowVector::Ones(4), sched));
  CHECK(j["m"] == 3);
  CHECK(j["edges"].size() == 3);
  CHECK(j["edges"][0] == nlohmann::json({0, 1}));
  CHECK(j["features"].size() == 3);
  CHECK(j["features"][0].size() == 2);
  CHECK(j["center"] == 0);
  CHECK(j["label"] == 1);
  CHECK(j["provenance"]["seed"] == 42);
  CHECK(j["provenance"]["schedule_digest"] == sched.digest());
}
