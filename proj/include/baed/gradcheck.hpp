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

#ifndef BAED_GRADCHECK_HPP_
#define BAED_GRADCHECK_HPP_

#include "baed/numeric.hpp"

#include <functional>
#include <string>
#include <vector>

namespace baed {

struct GradCheckOptions {
  double step = 1e-5;
  double tol = 1e-4;
  std::size_t max_coords_per_param = 200;
  std::uint64_t seed = 0;
  // Relative error denominators never drop below this.
  double abs_floor = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
  std::size_t kinks_skipped = 0;
  bool passed = true;
};

// The loss callback evaluates the scalar loss at the current parameter
// values. When called with true it must also accumulate d(loss)/d(param)
// into the stores' grad buffers (which the checker zeroes beforehand).
using LossFn = std::function<double(bool with_grads)>;

// Central differences on up to max_coords_per_param seeded coordinates per
// parameter. A coordinate whose estimate disagrees at step h but agrees at
// h/4 or h/16 straddled a ReLU kink; it is skipped and another coordinate
// is drawn in its place.
GradCheckReport gradient_check(const std::vector<ParamStore*>& stores,
                               const LossFn& loss,
                               const GradCheckOptions& options = {});

inline GradCheckReport gradient_check(ParamStore& store, const LossFn& loss,
                                      const GradCheckOptions& options = {}) {
  return gradient_check(std::vector<ParamStore*>{&store}, loss, options);
}

}  // namespace baed

#endif  // BAED_GRADCHECK_HPP_
