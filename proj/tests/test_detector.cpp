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

#include "baed/detector.hpp"
#include "baed/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace baed;

namespace {

EgoGraph make_ego(const Matrix& adj, const Matrix& x, Label label = Label::kNormal) {
  EgoGraph e;
  e.adjacency = adj;
  e.features = x;
  e.label = label;
  e.hops = 1;
  return e;
}

Matrix random_adjacency(Rng& rng, Eigen::Index m, double p) {
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      if (rng.bernoulli(p)) a(i, j) = a(j, i) = 1.0;
  return a;
}

EgoGraph random_ego(Rng& rng, Eigen::Index m, Eigen::Index d, Label label) {
  return make_ego(random_adjacency(rng, m, 0.5),
                  sample_gaussian_matrix(rng, m, d, 0.0, 1.0), label);
}

void zero_discriminator(DetectorParams& p) {
  for (auto name : {"disc.W1", "disc.b1", "disc.W2", "disc.b2"})
    p.store.at(name).value.setZero();
}

}  // namespace

TEST_CASE("gcn_normalize: 3-node path by hand") {
  Matrix a(3, 3);
  a << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const Matrix n = gcn_normalize(a);
  const double s6 = 1.0 / std::sqrt(6.0);
  Matrix expect(3, 3);
  expect << 0.5, s6, 0, s6, 1.0 / 3.0, s6, 0, s6, 0.5;
  CHECK((n - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(gcn_normalize(Matrix::Zero(1, 1))(0, 0) == 1.0);
}

TEST_CASE("encode_ego: hand-computed layers") {
  Rng rng(1);
  DetectorConfig cfg;
  cfg.layers = 1;
  cfg.hidden = 1;
  auto p = make_detector(1, cfg, rng);
  p.store.at("conv.0.W").value(0, 0) = 1.0;

  SUBCASE("single node") {
    auto enc = encode_ego(p, make_ego(Matrix::Zero(1, 1), Matrix::Constant(1, 1, 2.5)));
    CHECK(enc.layers[0](0, 0) == 2.5);
    CHECK(enc.deviation(0) == 0.0);
  }
  SUBCASE("path") {
    Matrix a(3, 3);
    a << 0, 1, 0, 1, 0, 1, 0, 1, 0;
    Matrix x(3, 1);
    x << 1, 2, 3;
    auto enc = encode_ego(p, make_ego(a, x));
    const double s6 = 1.0 / std::sqrt(6.0);
    CHECK(enc.layers[0](0, 0) == doctest::Approx(0.5 + 2 * s6).epsilon(1e-14));
    CHECK(enc.layers[0](1, 0) == doctest::Approx(4 * s6 + 2.0 / 3.0).epsilon(1e-14));
    CHECK(enc.layers[0](2, 0) == doctest::Approx(2 * s6 + 1.5).epsilon(1e-14));
    const double mean = enc.layers[0].mean();
    CHECK(enc.deviation(0) == doctest::Approx(enc.layers[0](0, 0) - mean).epsilon(1e-14));
  }
  SUBCASE("negative pre-activation is clipped") {
    p.store.at("conv.0.W").value(0, 0) = -1.0;
    auto enc = encode_ego(p, make_ego(Matrix::Zero(1, 1), Matrix::Constant(1, 1, 2.5)));
    CHECK(enc.layers[0](0, 0) == 0.0);
  }
}

TEST_CASE("encode_ego: aggregation modes and shapes") {
  Rng rng(2);
  const auto ego = random_ego(rng, 5, 4, Label::kNormal);
  DetectorConfig cfg;
  cfg.layers = 3;
  cfg.hidden = 6;
  auto mean_p = make_detector(4, cfg, rng);
  auto enc = encode_ego(mean_p, ego);
  REQUIRE(enc.layers.size() == 3);
  CHECK(enc.aggregated.rows() == 5);
  CHECK(enc.aggregated.cols() == 6);
  const Matrix avg = (enc.layers[0] + enc.layers[1] + enc.layers[2]) / 3.0;
  CHECK((enc.aggregated - avg).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((enc.deviation - deviation_readout(enc.aggregated)).cwiseAbs().maxCoeff() == 0.0);

  cfg.aggregation = Aggregation::kConcat;
  auto cat_p = make_detector(4, cfg, rng);
  auto cat = encode_ego(cat_p, ego);
  CHECK(cat.aggregated.cols() == 18);
  CHECK(cat.deviation.size() == 18);
  const double s = score_ego(cat_p, ego);
  CHECK(s > 0.0);
  CHECK(s < 1.0);

  CHECK_THROWS_AS(encode_ego(mean_p, random_ego(rng, 3, 5, Label::kNormal)), Error);
  CHECK_THROWS_AS(make_detector(4, DetectorConfig{0, 8}, rng), Error);
}

TEST_CASE("deviation_readout: closed forms and invariants") {
  Matrix h(2, 2);
  h << 1, 0, 0, 1;
  const RowVector d = deviation_readout(h);
  CHECK(d(0) == 0.5);
  CHECK(d(1) == -0.5);
  CHECK(deviation_readout(Matrix::Constant(1, 3, 7.0)).isZero(0.0));
  CHECK(deviation_readout(Matrix::Constant(4, 3, -2.0)).isZero(0.0));

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.uniform_index(8));
    const Matrix hm = sample_gaussian_matrix(rng, m, 5, 0, 1);
    const RowVector shift = sample_gaussian_matrix(rng, 1, 5, 0, 3);
    const double c = rng.normal() * 4.0;
    const RowVector base = deviation_readout(hm);
    const Matrix shifted = hm.rowwise() + shift;
    CHECK((deviation_readout(shifted) - base).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((deviation_readout(c * hm) - c * base).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(deviation_readout(c * hm).norm() ==
          doctest::Approx(std::abs(c) * base.norm()).epsilon(1e-12));
  }
}

TEST_CASE("deviation magnitude grows linearly with the centre offset") {
  // Identity encoding on raw features: neighbours fixed with mean mu, centre
  // at mu + delta * u. Then ||h_dev|| = |delta| (1 - 1/m) ||u||.
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.uniform_index(7));
    Matrix x = sample_gaussian_matrix(rng, m, 3, 0, 1);
    const RowVector mu = x.bottomRows(m - 1).colwise().mean();
    const RowVector u = sample_gaussian_matrix(rng, 1, 3, 0, 1);
    double previous = -1.0;
    for (double delta : {0.0, 0.25, 0.5, 1.0, 2.0, 8.0}) {
      x.row(0) = mu + delta * u;
      const double got = deviation_readout(x).norm();
      const double expect = delta * (1.0 - 1.0 / static_cast<double>(m)) * u.norm();
      CHECK(got == doctest::Approx(expect).epsilon(1e-12));
      x.row(0) = mu - delta * u;
      CHECK(deviation_readout(x).norm() == doctest::Approx(expect).epsilon(1e-12));
      CHECK(got > previous);
      previous = got;
    }
  }
}

TEST_CASE("score_ego: trivial values and determinism") {
  Rng rng(5);
  auto p = make_detector(3, DetectorConfig{}, rng);
  const auto ego = random_ego(rng, 6, 3, Label::kNormal);
  const double s1 = score_ego(p, ego);
  const double s2 = score_ego(p, ego);
  CHECK(s1 == s2);
  Rng rng_again(5);
  auto q = make_detector(3, DetectorConfig{}, rng_again);
  CHECK(score_ego(q, ego) == s1);

  // A lone node has zero deviation, so a zero-bias discriminator gives 0.5.
  CHECK(score_ego(p, make_ego(Matrix::Zero(1, 1), Matrix::Constant(1, 3, 9.0))) == 0.5);
  zero_discriminator(p);
  for (int i = 0; i < 5; ++i) CHECK(score_ego(p, random_ego(rng, 4, 3, Label::kNormal)) == 0.5);
}

TEST_CASE("score_ego: invariant to relabelling non-centre nodes") {
  Rng rng(6);
  auto p = make_detector(3, DetectorConfig{2, 16}, rng);
  for (Eigen::Index m = 2; m <= 6; ++m) {
    const auto ego = random_ego(rng, m, 3, Label::kNormal);
    const double base = score_ego(p, ego);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(m - 1));
    std::iota(perm.begin(), perm.end(), 1);
    do {
      std::vector<Eigen::Index> full{0};
      full.insert(full.end(), perm.begin(), perm.end());
      EgoGraph q = ego;
      for (Eigen::Index i = 0; i < m; ++i) {
        q.features.row(i) = ego.features.row(full[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < m; ++j)
          q.adjacency(i, j) = ego.adjacency(full[static_cast<std::size_t>(i)],
                                            full[static_cast<std::size_t>(j)]);
      }
      CHECK(std::abs(score_ego(p, q) - base) < 1e-12);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("score_ego reads only the extracted ego") {
  // Path 0-1-2-3-4-5 plus a branch; with K=1 around node 1, nodes 3.. are
  // outside the ball and may change freely.
  Rng rng(7);
  std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {3, 6}};
  const Matrix x = sample_gaussian_matrix(rng, 7, 3, 0, 1);
  std::vector<Label> labels(7, Label::kNormal);
  AttributedGraph g(7, edges, x, labels);
  auto p = make_detector(3, DetectorConfig{}, rng);
  const double before = score_ego(p, extract_ego_graph(g, 1, 1, kUnboundedEgo, 0));

  Matrix x2 = x;
  x2.bottomRows(4) = sample_gaussian_matrix(rng, 4, 3, 5, 2);
  auto edges2 = edges;
  edges2.push_back({4, 6});
  edges2.push_back({5, 6});
  std::vector<Label> labels2(7, Label::kAnomalous);
  AttributedGraph g2(7, edges2, x2, labels2);
  const double after = score_ego(p, extract_ego_graph(g2, 1, 1, kUnboundedEgo, 0));
  CHECK(before == after);

  // Touching the ball does change the score.
  Matrix x3 = x;
  x3.row(2).array() += 3.0;
  AttributedGraph g3(7, edges, x3, labels);
  CHECK(score_ego(p, extract_ego_graph(g3, 1, 1, kUnboundedEgo, 0)) != before);
}

TEST_CASE("detector_loss_and_grads: analytic losses") {
  Rng rng(8);
  auto p = make_detector(2, DetectorConfig{2, 8}, rng);
  std::vector<EgoGraph> batch{random_ego(rng, 4, 2, Label::kNormal),
                              random_ego(rng, 3, 2, Label::kAnomalous)};
  zero_discriminator(p);
  auto out = detector_loss_and_grads(p, batch);
  for (double l : out.sample_losses) CHECK(l == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(out.mean_loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  for (double s : out.scores) CHECK(s == 0.5);

  // Saturated discriminator: the clamp bounds the loss from below and above.
  p.store.zero_grad();
  p.store.at("disc.b2").value(0, 0) = 100.0;
  out = detector_loss_and_grads(p, batch);
  CHECK(out.sample_losses[1] == doctest::Approx(-std::log1p(-1e-7)).epsilon(1e-6));
  CHECK(out.sample_losses[1] < 1.1e-7);
  CHECK(out.sample_losses[0] == doctest::Approx(-std::log(1e-7)).epsilon(1e-9));

  std::vector<EgoGraph> empty;
  CHECK_THROWS_AS(detector_loss_and_grads(p, empty), Error);
  std::vector<EgoGraph> unlabelled{random_ego(rng, 2, 2, Label::kUnknown)};
  CHECK_THROWS_AS(detector_loss_and_grads(p, unlabelled), Error);
}

TEST_CASE("detector_loss_and_grads: gradients match finite differences") {
  for (auto agg : {Aggregation::kMean, Aggregation::kConcat}) {
    Rng rng(9);
    DetectorConfig cfg{2, 8, agg};
    auto p = make_detector(3, cfg, rng);
    // The lone-node ego has zero deviation; nonzero biases keep its hidden
    // pre-activations off the ReLU kink.
    p.store.at("disc.b1").value = sample_gaussian_matrix(rng, 1, 8, 0, 0.5);
    std::vector<EgoGraph> batch{random_ego(rng, 5, 3, Label::kNormal),
                                random_ego(rng, 4, 3, Label::kAnomalous),
                                random_ego(rng, 6, 3, Label::kNormal),
                                random_ego(rng, 1, 3, Label::kAnomalous)};
    auto loss = [&](bool with_grads) {
      if (with_grads) return detector_loss_and_grads(p, batch).mean_loss;
      double total = 0.0;
      for (const auto& e : batch) {
        const double s = std::clamp(score_ego(p, e), 1e-7, 1.0 - 1e-7);
        total += e.label == Label::kAnomalous ? -std::log(s) : -std::log1p(-s);
      }
      return total / static_cast<double>(batch.size());
    };
    const auto report = gradient_check(p.store, loss, GradCheckOptions{});
    INFO("worst " << report.worst_param << "[" << report.worst_index << "] "
                  << report.worst_analytic << " vs " << report.worst_numeric);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-4);
    CHECK(report.coords_checked > 100);
  }
}
