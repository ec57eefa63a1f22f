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

#include "baed/metrics.hpp"

#include "baed/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace baed {

namespace {

struct ClassCounts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scores and labels differ in length");
  }
  ClassCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    if (std::isnan(scores[i])) throw Error(ErrorCode::kInvalidArgument, "NaN score");
    (labels[i] ? c.pos : c.neg)++;
  }
  return c;
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// Accepted set is an upper (or lower) set of eta with a strict gap.
bool separates(const std::vector<double>& eta, const std::vector<bool>& acc, bool above) {
  double acc_lo = std::numeric_limits<double>::infinity(), acc_hi = -acc_lo;
  double rej_lo = acc_lo, rej_hi = -acc_lo;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (acc[i]) {
      acc_lo = std::min(acc_lo, eta[i]);
      acc_hi = std::max(acc_hi, eta[i]);
    } else {
      rej_lo = std::min(rej_lo, eta[i]);
      rej_hi = std::max(rej_hi, eta[i]);
    }
  }
  return above ? acc_lo > rej_hi : acc_hi < rej_lo;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const auto c = check_inputs(scores, labels);
  if (c.pos == 0 || c.neg == 0) throw Error(ErrorCode::kInvalidArgument, "single-class input");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) pos_rank_sum += avg_rank;
    i = j;
  }
  const double p = static_cast<double>(c.pos), n = static_cast<double>(c.neg);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  const auto c = check_inputs(scores, labels);
  if (c.pos == 0) throw Error(ErrorCode::kInvalidArgument, "no positives");
  const auto order = descending_order(scores);
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  const double p = static_cast<double>(c.pos);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / p;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double f1_score(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && labels[i]) tp += 1.0;
    if (pred && !labels[i]) fp += 1.0;
    if (!pred && labels[i]) fn += 1.0;
  }
  if (tp == 0.0) return 0.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

MetricCoefficients f1_coefficients(double pi) { return {0.0, 2.0, 0.0, pi, 0.0, 1.0}; }

MetricCoefficients accuracy_coefficients(double pi) {
  return {1.0 - pi, 2.0, -1.0, 1.0, 0.0, 0.0};
}

double metric_value(double tp, double gamma, const MetricCoefficients& k) {
  const double den = k.d0 + k.d1 * tp + k.d2 * gamma;
  if (den == 0.0) throw Error(ErrorCode::kNumeric, "metric denominator is zero");
  return (k.c0 + k.c1 * tp + k.c2 * gamma) / den;
}

ThresholdRule optimal_threshold_formula(double l_star, const MetricCoefficients& k) {
  const double den = k.c1 - k.d1 * l_star;
  if (den == 0.0) throw Error(ErrorCode::kNumeric, "degenerate threshold: c1 = d1 L*");
  return {(k.d2 * l_star - k.c2) / den, den > 0.0};
}

double FiniteInstance::pi() const {
  double s = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) s += mass[i] * eta[i];
  return s;
}

void FiniteInstance::validate() const {
  if (eta.empty() || eta.size() != mass.size()) {
    throw Error(ErrorCode::kInvalidArgument, "instance needs equal, nonempty eta and mass");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (!(eta[i] >= 0.0 && eta[i] <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "eta outside [0, 1]");
    if (!(mass[i] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "masses must be positive");
    total += mass[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::kInvalidArgument, "masses must sum to 1");
}

OptimalClassifier brute_force_optimal(const FiniteInstance& inst, const MetricCoefficients& coef) {
  inst.validate();
  const std::size_t k = inst.eta.size();
  OptimalClassifier best;
  best.l_star = -std::numeric_limits<double>::infinity();
  best.degenerate =
      std::all_of(inst.eta.begin(), inst.eta.end(), [&](double e) { return e == inst.eta[0]; });

  auto evaluate = [&](const std::vector<bool>& acc) -> double {
    double tp = 0.0, gamma = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (acc[i]) {
        tp += inst.mass[i] * inst.eta[i];
        gamma += inst.mass[i];
      }
    }
    const double den = coef.d0 + coef.d1 * tp + coef.d2 * gamma;
    if (den == 0.0) return -std::numeric_limits<double>::infinity();
    return (coef.c0 + coef.c1 * tp + coef.c2 * gamma) / den;
  };

  std::vector<std::vector<bool>> candidates;
  if (k <= kExhaustiveLimit) {
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
      std::vector<bool> acc(k);
      for (std::size_t i = 0; i < k; ++i) acc[i] = (mask >> i) & 1u;
      candidates.push_back(std::move(acc));
    }
  } else {
    std::vector<double> cuts(inst.eta);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (bool above : {true, false}) {
      for (std::size_t c = 0; c <= cuts.size(); ++c) {
        std::vector<bool> acc(k);
        for (std::size_t i = 0; i < k; ++i) {
          const auto rank = static_cast<std::size_t>(
              std::lower_bound(cuts.begin(), cuts.end(), inst.eta[i]) - cuts.begin());
          acc[i] = above ? rank >= c : rank < c;
        }
        candidates.push_back(std::move(acc));
      }
    }
  }
  best.candidates = candidates.size();

  std::vector<double> values(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    values[c] = evaluate(candidates[c]);
    best.l_star = std::max(best.l_star, values[c]);
  }
  // Among maximisers (to rounding) prefer one that is a threshold rule.
  const double tol = 1e-12 * std::max(1.0, std::abs(best.l_star));
  std::size_t pick = candidates.size();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (values[c] < best.l_star - tol) continue;
    if (pick == candidates.size()) pick = c;
    for (bool above : {true, false}) {
      if (separates(inst.eta, candidates[c], above) && !best.is_threshold_rule) {
        best.is_threshold_rule = true;
        best.predict_above = above;
        pick = c;
      }
    }
  }
  best.accepted = candidates[pick];
  best.l_star = values[pick];

  double acc_lo = 2.0, acc_hi = -1.0, rej_lo = 2.0, rej_hi = -1.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (best.accepted[i]) {
      acc_lo = std::min(acc_lo, inst.eta[i]);
      acc_hi = std::max(acc_hi, inst.eta[i]);
    } else {
      rej_lo = std::min(rej_lo, inst.eta[i]);
      rej_hi = std::max(rej_hi, inst.eta[i]);
    }
  }
  const bool none = acc_hi < 0.0, all = rej_hi < 0.0;
  if (none) {
    best.threshold = best.predict_above ? 1.0 : 0.0;
  } else if (all) {
    best.threshold = best.predict_above ? 0.0 : 1.0;
  } else {
    best.threshold = best.predict_above ? 0.5 * (acc_lo + rej_hi) : 0.5 * (acc_hi + rej_lo);
  }
  return best;
}

TheoremSummary verify_threshold_theorem(std::uint64_t seed, std::size_t instances,
                                        std::size_t k, std::size_t coef_sets) {
  if (instances == 0 || k == 0 || k > kExhaustiveLimit || coef_sets < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "theorem check needs instances >= 1, 1 <= k <= 12 and coef_sets >= 2");
  }
  Rng rng(seed, "threshold-theorem", 0);
  TheoremSummary out;
  for (std::size_t n = 0; n < instances; ++n) {
    FiniteInstance inst;
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      inst.eta.push_back(rng.uniform());
      inst.mass.push_back(0.05 + rng.uniform());
      total += inst.mass.back();
    }
    for (double& m : inst.mass) m /= total;
    std::vector<MetricCoefficients> sets{f1_coefficients(inst.pi()), accuracy_coefficients(inst.pi())};
    while (sets.size() < coef_sets) {
      MetricCoefficients c;
      c.c0 = 4.0 * rng.uniform() - 2.0;
      c.c1 = 4.0 * rng.uniform() - 2.0;
      c.c2 = 4.0 * rng.uniform() - 2.0;
      c.d0 = 0.1 + 2.0 * rng.uniform();
      c.d1 = 2.0 * rng.uniform();
      c.d2 = 2.0 * rng.uniform();
      sets.push_back(c);
    }
    for (const auto& coef : sets) {
      ++out.cases;
      const auto opt = brute_force_optimal(inst, coef);
      out.threshold_rules += opt.is_threshold_rule;
      const auto rule = optimal_threshold_formula(opt.l_star, coef);
      bool ok = true, any_acc = false, any_rej = false;
      for (std::size_t i = 0; i < k; ++i) {
        const double e = inst.eta[i];
        const bool predicted = rule.predict_above ? e > rule.delta : e < rule.delta;
        if (e == rule.delta || predicted != opt.accepted[i]) ok = false;
        (opt.accepted[i] ? any_acc : any_rej) = true;
      }
      out.formula_separations += ok;
      out.mixed_optima += any_acc && any_rej;
    }
  }
  return out;
}

F1Cut best_f1_cut(std::span<const double> scores, std::span<const int> labels) {
  const auto counts = check_inputs(scores, labels);
  if (counts.pos == 0) throw Error(ErrorCode::kInvalidArgument, "no positive labels");
  const auto order = descending_order(scores);
  F1Cut best;
  best.threshold = scores[order.front()];
  double tp = 0.0, fp = 0.0;
  const double pos = static_cast<double>(counts.pos);
  for (std::size_t r = 0; r < order.size(); ++r) {
    (labels[order[r]] ? tp : fp) += 1.0;
    if (r + 1 < order.size() && scores[order[r + 1]] == scores[order[r]]) continue;
    const double f1 = tp > 0.0 ? 2.0 * tp / (tp + fp + pos) : 0.0;
    if (f1 > best.f1) best = {scores[order[r]], f1};
  }
  return best;
}

}  // namespace baed
