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

#include "baed/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace baed {

namespace {

double central_difference(const LossFn& loss, double& coord, double h) {
  const double saved = coord;
  coord = saved + h;
  const double plus = loss(false);
  coord = saved - h;
  const double minus = loss(false);
  coord = saved;
  return (plus - minus) / (2.0 * h);
}

double rel_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

}  // namespace

GradCheckReport gradient_check(const std::vector<ParamStore*>& stores,
                               const LossFn& loss,
                               const GradCheckOptions& options) {
  for (ParamStore* s : stores) s->zero_grad();
  loss(true);

  GradCheckReport report;
  Rng rng(options.seed, "gradient_check");
  for (ParamStore* store : stores) {
    for (auto& [name, p] : *store) {
      const Matrix analytic = p.grad;
      const auto n = static_cast<std::size_t>(p.value.size());
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      if (n > options.max_coords_per_param) rng.shuffle(order.begin(), order.end());

      std::size_t checked = 0;
      for (std::size_t idx : order) {
        if (checked >= options.max_coords_per_param) break;
        double& coord = p.value.data()[idx];
        const double a = analytic.data()[idx];
        double num = central_difference(loss, coord, options.step);
        double err = rel_error(a, num, options.abs_floor);
        if (err > options.tol) {
          const double fine1 = central_difference(loss, coord, options.step / 4);
          const double fine2 = central_difference(loss, coord, options.step / 16);
          const double e1 = rel_error(a, fine1, options.abs_floor);
          const double e2 = rel_error(a, fine2, options.abs_floor);
          if (std::min(e1, e2) <= options.tol) {
            ++report.kinks_skipped;
            continue;
          }
        }
        ++checked;
        if (err > report.max_rel_error || report.worst_index < 0) {
          if (err >= report.max_rel_error) {
            report.max_rel_error = err;
            report.worst_param = name;
            report.worst_index = static_cast<Eigen::Index>(idx);
            report.worst_analytic = a;
            report.worst_numeric = num;
          }
        }
      }
      report.coords_checked += checked;
    }
  }
  for (ParamStore* s : stores) s->zero_grad();
  report.passed = report.max_rel_error < options.tol;
  return report;
}

}  // namespace baed
