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

// Ranking metrics and the linear-fractional metric theory: closed-form
// optimal thresholds checked against brute-force optimisation.

#ifndef BAED_METRICS_HPP_
#define BAED_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace baed {

// Mann-Whitney statistic with ties counted one half. Labels are 0 or 1.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Average precision over descending unique score thresholds; tied scores
// enter at a single threshold.
double auprc(std::span<const double> scores, std::span<const int> labels);

// F1 on the positive class predicting 1 when score >= threshold; 0 when
// there are no predicted or no true positives.
double f1_score(std::span<const double> scores, std::span<const int> labels,
                double threshold = 0.5);

// L = (c0 + c1 TP + c2 gamma) / (d0 + d1 TP + d2 gamma).
struct MetricCoefficients {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double d0 = 1.0, d1 = 0.0, d2 = 0.0;
};

MetricCoefficients f1_coefficients(double pi);
MetricCoefficients accuracy_coefficients(double pi);

double metric_value(double tp, double gamma, const MetricCoefficients& coef);

// Predict 1 when eta > delta if predict_above, else when eta < delta.
struct ThresholdRule {
  double delta = 0.0;
  bool predict_above = true;
};

// delta* = (d2 L* - c2) / (c1 - d1 L*).
ThresholdRule optimal_threshold_formula(double l_star, const MetricCoefficients& coef);

struct FiniteInstance {
  std::vector<double> eta;
  std::vector<double> mass;

  double pi() const;
  void validate() const;
};

struct OptimalClassifier {
  double l_star = 0.0;
  std::vector<bool> accepted;
  // Midpoint between the accepted and rejected eta values on the optimum.
  double threshold = 0.0;
  bool is_threshold_rule = false;
  bool predict_above = true;
  bool degenerate = false;
  std::size_t candidates = 0;
};

inline constexpr std::size_t kExhaustiveLimit = 12;

// All 2^k subsets for k <= 12, otherwise every threshold rule on sorted eta.
OptimalClassifier brute_force_optimal(const FiniteInstance& inst,
                                      const MetricCoefficients& coef);

struct TheoremSummary {
  std::size_t cases = 0;
  std::size_t threshold_rules = 0;
  std::size_t formula_separations = 0;
  std::size_t mixed_optima = 0;
  bool passed() const { return threshold_rules == cases && formula_separations == cases; }
};

// Checks random instances of k points, each under F1, accuracy and
// coef_sets - 2 random coefficient sets with a positive denominator. A case
// passes when the subset optimum is a threshold rule and the closed-form
// delta* puts every accepted eta strictly on its side and every rejected eta
// strictly on the other.
TheoremSummary verify_threshold_theorem(std::uint64_t seed, std::size_t instances,
                                        std::size_t k, std::size_t coef_sets);

struct F1Cut {
  double threshold = 0.0;
  double f1 = 0.0;
};

// Highest F1 over cuts at every distinct score (predict 1 when score >= cut).
F1Cut best_f1_cut(std::span<const double> scores, std::span<const int> labels);

}  // namespace baed

#endif  // BAED_METRICS_HPP_
