/**
 * Copyright 2026 The qfpsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef QFP_OPTIMIZE_HPP
#define QFP_OPTIMIZE_HPP

#include <functional>
#include <vector>

namespace qfp {

/// Per-parameter box bounds.
struct BoxSpec {
  std::vector<double> lo;
  std::vector<double> hi;

  void validate(std::size_t n) const;  ///< sizes match n, lo <= hi, finite
  std::vector<double> clip(std::vector<double> x) const;
};

struct MinimizeOptions {
  int max_iters = 200;
  long long max_evals = 1000000;  ///< objective-evaluation budget
  double fd_step = 1e-6;          ///< central-difference step
  double gtol = 1e-9;             ///< projected-gradient infinity norm
  double ftol = 1e-13;            ///< relative objective-decrease floor
  /// On a failed line search along the quasi-Newton direction, reset the
  /// curvature model and retry along the raw gradient instead of stopping.
  /// Worth paying for when polishing; wasteful in broad exploration.
  bool reset_retry = true;
};

struct MinimizeResult {
  std::vector<double> x;
  double f = 0.0;
  int iters = 0;
  long long evals = 0;
  bool converged = false;       ///< gradient/decrease test met
  bool eval_capped = false;     ///< stopped by the evaluation budget
  std::vector<double> trace;    ///< objective after each accepted step
};

/// Box-constrained quasi-Newton descent on central finite differences:
/// BFGS inverse-Hessian updates, Armijo backtracking along the projected
/// step, gradient components frozen at active bounds.  Deterministic for a
/// deterministic objective.
MinimizeResult minimize_box(
    const std::function<double(const std::vector<double>&)>& objective,
    std::vector<double> x0, const BoxSpec& box,
    const MinimizeOptions& opts = {});

}  // namespace qfp

#endif  // QFP_OPTIMIZE_HPP
