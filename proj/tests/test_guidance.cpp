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

#include "baed/gradcheck.hpp"
#include "baed/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace baed;

namespace {

EgoGraph make_ego(const Matrix& adj, const Matrix& x) {
  EgoGraph e;
  e.adjacency = adj;
  e.features = x;
  e.label = Label::kAnomalous;
  return e;
}

Matrix random_adjacency(Rng& rng, Eigen::Index m) {
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      if (rng.bernoulli(0.5)) a(i, j) = a(j, i) = 1.0;
  return a;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("gin_encode: single node with identity MLPs returns the features") {
  Rng rng(1);
  auto p = make_gin(3, GinConfig{2, 3}, rng);
  for (int k = 0; k < 2; ++k) {
    const std::string base = "gin." + std::to_string(k) + ".";
    p.store.at(base + "W1").value = Matrix::Identity(3, 3);
    p.store.at(base + "W2").value = Matrix::Identity(3, 3);
  }
  Matrix x(1, 3);
  x << 0.5, 2.0, 0.0;
  const RowVector out = gin_encode(p, make_ego(Matrix::Zero(1, 1), x));
  CHECK((out - x).cwiseAbs().maxCoeff() == 0.0);

  // Two nodes joined by an edge: each layer maps h to (h_v + h_u) on both.
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  Matrix x2(2, 3);
  x2 << 1, 0, 2, 3, 1, 0;
  const RowVector two = gin_encode(p, make_ego(a, x2));
  const RowVector s = x2.colwise().sum();
  CHECK((two - 2.0 * s).cwiseAbs().maxCoeff() < 1e-14);

  p.config.readout = GinReadout::kSum;
  CHECK((gin_encode(p, make_ego(a, x2)) - 4.0 * s).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(gin_encode(p, make_ego(a, Matrix::Zero(2, 4))), Error);
}

TEST_CASE("gin_encode: exact permutation invariance") {
  Rng rng(2);
  auto p = make_gin(4, GinConfig{2, 16}, rng);
  for (Eigen::Index m = 1; m <= 6; ++m) {
    const auto ego = make_ego(random_adjacency(rng, m), sample_gaussian_matrix(rng, m, 4, 0, 1));
    const RowVector base = gin_encode(p, ego);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    double worst = 0.0;
    do {
      EgoGraph q = ego;
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto pi = perm[static_cast<std::size_t>(i)];
        q.features.row(i) = ego.features.row(pi);
        for (Eigen::Index j = 0; j < m; ++j)
          q.adjacency(i, j) = ego.adjacency(pi, perm[static_cast<std::size_t>(j)]);
      }
      worst = std::max(worst, (gin_encode(p, q) - base).cwiseAbs().maxCoeff());
    } while (std::next_permutation(perm.begin(), perm.end()));
    // Summation order changes under permutation, so allow rounding.
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("gin_encode separates a triangle from a path") {
  Matrix tri(3, 3), path(3, 3);
  tri << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  path << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const Matrix x = Matrix::Ones(3, 4);
  int differ = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    auto p = make_gin(4, GinConfig{}, rng);
    const RowVector a = gin_encode(p, make_ego(tri, x));
    const RowVector b = gin_encode(p, make_ego(path, x));
    if ((a - b).norm() > 1e-9 * (1.0 + a.norm())) ++differ;
  }
  CHECK(differ >= 95);
}

TEST_CASE("gin_encode: gradients match finite differences") {
  Rng rng(3);
  auto p = make_gin(3, GinConfig{2, 8}, rng);
  for (int k = 0; k < 2; ++k)
    p.store.at("gin." + std::to_string(k) + ".b1").value = sample_gaussian_matrix(rng, 1, 8, 0, 0.3);
  std::vector<EgoGraph> egos;
  for (Eigen::Index m : {1, 3, 5})
    egos.push_back(make_ego(random_adjacency(rng, m), sample_gaussian_matrix(rng, m, 3, 0, 1)));
  const Matrix probe = sample_gaussian_matrix(rng, 1, 8, 0, 1);
  auto loss = [&](bool with_grads) {
    double total = 0.0;
    for (const auto& e : egos) {
      Tape t(with_grads);
      Var out = gin_encode(t, bind_params(t, p.store), p, e);
      Var l = sum_all(t, mul(t, out, t.constant(probe)));
      if (with_grads) t.backward(l);
      total += t.value(l)(0, 0);
    }
    return total;
  };
  const auto report = gradient_check(p.store, loss);
  INFO(report.worst_param << " " << report.worst_analytic << " vs " << report.worst_numeric);
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("curriculum_weight: closed forms") {
  CurriculumConfig cfg{5.0, 0.5, 10.0};
  CHECK(curriculum_weight(0.5, 10.0, cfg) == 0.5);
  CHECK(curriculum_weight(3.0, 0.0, cfg) == 0.0);
  CHECK(curriculum_weight(0.9, 10.0, cfg) == doctest::Approx(0.8807970779778823).epsilon(1e-15));
  CHECK(curriculum_weight(0.9, 5.0, cfg) == doctest::Approx(0.5 * sigmoid(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(curriculum_weight(0.1, 11.0, cfg), Error);
  CHECK_THROWS_AS(curriculum_weight(0.1, -1.0, cfg), Error);
  CHECK_THROWS_AS(curriculum_weight(0.1, 1.0, CurriculumConfig{0.0, 0.0, 1.0}), Error);
  CHECK_THROWS_AS(curriculum_weight(0.1, 0.5, CurriculumConfig{1.0, 0.0, 0.5}), Error);
}

TEST_CASE("curriculum_weight: monotonicity and bounds") {
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    CurriculumConfig cfg;
    cfg.alpha = 0.1 + 4.9 * rng.uniform();
    cfg.beta_shift = 2.0 * rng.uniform();
    cfg.total_iters = 1.0 + static_cast<double>(rng.uniform_index(500));
    const double l1 = 5.0 * rng.uniform();
    const double l2 = l1 + 1e-3 + rng.uniform();
    const double t1 = std::floor(rng.uniform() * cfg.total_iters);
    const double t2 = std::min(cfg.total_iters, t1 + static_cast<double>(rng.uniform_index(3)));
    if (t1 > 0.0) CHECK(curriculum_weight(l1, t1, cfg) < curriculum_weight(l2, t1, cfg));
    CHECK(curriculum_weight(l1, t1, cfg) <= curriculum_weight(l1, t2, cfg));
    CHECK(curriculum_weight(l2, 0.0, cfg) == 0.0);
    const double h = t2 / cfg.total_iters;
    const double w = curriculum_weight(l2, t2, cfg);
    CHECK(w >= 0.0);
    if (t2 > 0.0) CHECK(w < h);
  }
}

TEST_CASE("aggregate_guidance") {
  Rng rng(5);
  std::vector<RowVector> e{RowVector::Constant(3, 1.0), RowVector::Constant(3, 5.0)};
  std::vector<double> w{1.0, 3.0};
  CHECK((aggregate_guidance(e, w) - RowVector::Constant(3, 4.0)).cwiseAbs().maxCoeff() < 1e-15);
  std::vector<double> equal{2.0, 2.0};
  CHECK((aggregate_guidance(e, equal) - RowVector::Constant(3, 3.0)).cwiseAbs().maxCoeff() == 0.0);
  std::vector<double> zeros{0.0, 0.0};
  CHECK((aggregate_guidance(e, zeros) - RowVector::Constant(3, 3.0)).cwiseAbs().maxCoeff() == 0.0);
  std::vector<double> one_hot{0.0, 1.0};
  CHECK((aggregate_guidance(e, one_hot) - e[1]).cwiseAbs().maxCoeff() == 0.0);

  std::vector<RowVector> none;
  std::vector<double> no_w;
  CHECK_THROWS_AS(aggregate_guidance(none, no_w), Error);
  std::vector<double> short_w{1.0};
  CHECK_THROWS_AS(aggregate_guidance(e, short_w), Error);
  std::vector<double> negative{1.0, -1.0};
  CHECK_THROWS_AS(aggregate_guidance(e, negative), Error);

  for (int trial = 0; trial < 10000; ++trial) {
    const auto k = 1 + rng.uniform_index(12);
    std::vector<RowVector> emb;
    std::vector<double> ws;
    for (std::size_t i = 0; i < k; ++i) {
      emb.push_back(sample_gaussian_matrix(rng, 1, 4, 0, 1));
      ws.push_back(rng.uniform() < 0.2 ? 0.0 : rng.uniform());
    }
    const auto norm = normalize_weights(ws);
    CHECK(std::abs(std::accumulate(norm.begin(), norm.end(), 0.0) - 1.0) <= 1e-12);
    const RowVector agg = aggregate_guidance(emb, ws);
    for (Eigen::Index c = 0; c < 4; ++c) {
      double lo = emb[0](c), hi = emb[0](c);
      for (const auto& v : emb) {
        lo = std::min(lo, v(c));
        hi = std::max(hi, v(c));
      }
      CHECK(agg(c) >= lo - 1e-12);
      CHECK(agg(c) <= hi + 1e-12);
    }
  }
}

TEST_CASE("GuidanceEma") {
  GuidanceEma ema(0.9);
  CHECK_FALSE(ema.initialized());
  CHECK_THROWS_AS(ema.value(), Error);
  ema.update(RowVector::Constant(2, 10.0));
  CHECK(ema.value()(0) == 10.0);
  ema.update(RowVector::Zero(2));
  CHECK(ema.value()(1) == doctest::Approx(9.0).epsilon(1e-15));
  ema.reset(RowVector::Constant(2, -1.0));
  CHECK(ema.value()(0) == -1.0);
}
