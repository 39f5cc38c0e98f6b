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

#include "qfp/optimize.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "qfp/errors.hpp"

namespace qfp {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Vec to_vec(const std::vector<double>& x) {
  return Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
}

std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

void BoxSpec::validate(std::size_t n) const {
  if (lo.size() != n || hi.size() != n)
    throw ConfigError("BoxSpec: bound sizes do not match parameter count");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i])
      throw ConfigError("BoxSpec: bounds must be finite with lo <= hi");
  }
}

std::vector<double> BoxSpec::clip(std::vector<double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::clamp(x[i], lo[i], hi[i]);
  return x;
}

MinimizeResult minimize_box(
    const std::function<double(const std::vector<double>&)>& objective,
    std::vector<double> x0, const BoxSpec& box, const MinimizeOptions& opts) {
  const std::size_t n = x0.size();
  if (n == 0) throw ConfigError("minimize_box: empty parameter vector");
  box.validate(n);

  MinimizeResult res;
  long long evals = 0;
  const auto feval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = objective(x);
    if (std::isnan(v))
      throw ToleranceError("minimize_box: objective returned NaN");
    return v;
  };

  const Vec blo = to_vec(box.lo), bhi = to_vec(box.hi);
  const auto clipv = [&](Vec x) {
    return x.cwiseMax(blo).cwiseMin(bhi);
  };

  // Central differences; steps shrink near bounds so probes stay feasible.
  const auto fdgrad = [&](const Vec& x) {
    Vec g(n);
    std::vector<double> probe = to_std(x);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x(static_cast<Eigen::Index>(i));
      const double up = std::min(xi + opts.fd_step, box.hi[i]);
      const double dn = std::max(xi - opts.fd_step, box.lo[i]);
      if (up == dn) {
        g(static_cast<Eigen::Index>(i)) = 0.0;
        continue;
      }
      probe[i] = up;
      const double fu = feval(probe);
      probe[i] = dn;
      const double fd = feval(probe);
      probe[i] = xi;
      g(static_cast<Eigen::Index>(i)) = (fu - fd) / (up - dn);
    }
    return g;
  };

  // Gradient components pointing out of the feasible box contribute
  // nothing; this is the stationarity measure at bound-active solutions.
  const auto projected = [&](const Vec& x, const Vec& g) {
    Vec pg = g;
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (x(k) <= box.lo[i] && g(k) > 0.0) pg(k) = 0.0;
      if (x(k) >= box.hi[i] && g(k) < 0.0) pg(k) = 0.0;
    }
    return pg;
  };

  Vec x = clipv(to_vec(x0));
  double fx = feval(to_std(x));
  Vec g = fdgrad(x);
  Mat h = Mat::Identity(static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(n));
  res.trace.push_back(fx);

  int flat_steps = 0;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (evals >= opts.max_evals) {
      res.eval_capped = true;
      break;
    }
    const Vec pg = projected(x, g);
    if (pg.lpNorm<Eigen::Infinity>() < opts.gtol) {
      res.converged = true;
      break;
    }

    Vec d = -(h * g);
    bool bfgs_dir = true;
    if (d.dot(g) > -1e-14 * d.norm() * g.norm()) {
      // Curvature model untrustworthy; fall back to steepest descent.
      d = -g;
      h.setIdentity();
      bfgs_dir = false;
    }

    // Armijo backtracking along the projected path.
    Vec x_new = x;
    double f_new = fx;
    const auto line_search = [&](const Vec& dir) {
      double t = 1.0;
      for (int ls = 0; ls < 40; ++ls) {
        if (evals >= opts.max_evals) return false;
        x_new = clipv(x + t * dir);
        const Vec step = x_new - x;
        if (step.lpNorm<Eigen::Infinity>() < 1e-18) return false;
        f_new = feval(to_std(x_new));
        if (f_new <= fx + 1e-4 * g.dot(step)) return true;
        t *= 0.5;
      }
      return false;
    };
    bool accepted = line_search(d);
    if (!accepted && opts.reset_retry && bfgs_dir && evals < opts.max_evals) {
      // The quasi-Newton direction stalled; discard the model and try the
      // raw gradient before giving up on this iterate.
      h.setIdentity();
      d = -g;
      accepted = line_search(d);
    }
    if (!accepted) {
      if (evals >= opts.max_evals)
        res.eval_capped = true;
      else
        res.converged = true;  // no descent direction left at resolution
      break;
    }

    const Vec s = x_new - x;
    const Vec g_new = fdgrad(x_new);
    const Vec y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const Mat sm = s, ym = y;  // column vectors
      const double rho = 1.0 / sy;
      const Mat left =
          Mat::Identity(h.rows(), h.cols()) - rho * sm * ym.transpose();
      h = left * h * left.transpose() + rho * sm * sm.transpose();
    }
    const double decrease = fx - f_new;
    x = x_new;
    fx = f_new;
    g = g_new;
    res.iters = iter + 1;
    res.trace.push_back(fx);
    if (decrease < opts.ftol * (std::fabs(fx) + 1e-12)) {
      if (++flat_steps >= 2) {
        res.converged = true;
        break;
      }
    } else {
      flat_steps = 0;
    }
  }

  res.x = to_std(x);
  res.f = fx;
  res.evals = evals;
  return res;
}

}  // namespace qfp
