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

#include "qfp/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "qfp/bessel.hpp"
#include "qfp/errors.hpp"
#include "qfp/rng.hpp"
#include "qfp/serialize.hpp"

namespace qfp {

namespace {

constexpr double kPi = std::numbers::pi;

double stage_weight(const std::vector<double>& params, int harmonics,
                    int offset) {
  double s = 0.0;
  for (int h = 1; h <= harmonics; ++h)
    s += h * std::fabs(params[static_cast<std::size_t>(offset + h - 1)]);
  return s;
}

/// Objective evaluator sized for descent: propagates only the logical-bin
/// columns through the cascade as banded convolutions, lifts the logical
/// submatrix directly, and scores it.  The guard only ever grows within one
/// descent so finite differences see a consistent discretization.
class FastObjective {
 public:
  FastObjective(const CircuitTemplate& tpl, const TargetGate& target,
                double lambda_f, double lambda_p, double p_target,
                double margin_scale = 1.0)
      : tpl_(tpl),
        target_(target),
        lambda_f_(lambda_f),
        lambda_p_(lambda_p),
        p_target_(p_target),
        margin_scale_(margin_scale),
        guard_(scaled_guard(std::vector<double>(tpl.param_count(), 0.0))) {
    std::set<int> bins;
    for (const auto& a : target.logical_assignments)
      bins.insert(a.begin(), a.end());
    distinct_bins_.assign(bins.begin(), bins.end());
    const auto position = [&](int bin) {
      return static_cast<int>(
          std::lower_bound(distinct_bins_.begin(), distinct_bins_.end(), bin) -
          distinct_bins_.begin());
    };
    for (const auto& a : target.logical_assignments) {
      std::vector<int> pos;
      double norm = 1.0;
      int run = 1;
      for (std::size_t i = 0; i < a.size(); ++i) {
        pos.push_back(position(a[i]));
        run = (i > 0 && a[i] == a[i - 1]) ? run + 1 : 1;
        norm *= run;
      }
      positions_.push_back(std::move(pos));
      prefactor_.push_back(1.0 / std::sqrt(norm));
    }
  }

  int guard_ex() const {
    return std::max({tpl_.declared_lo - tpl_.shaper_lo,
                     tpl_.shaper_hi - tpl_.declared_hi, 0});
  }

  /// Same structure as CircuitTemplate::guard_for but with the sideband
  /// margin shrunk by margin_scale: exploration ranks basins on a cheaper
  /// window, polishing and all reported numbers use the full one.
  int scaled_guard(const std::vector<double>& p) const {
    const double total = stage_weight(p, tpl_.harmonics, 0) +
                         stage_weight(p, tpl_.harmonics, 2 * tpl_.harmonics);
    const int margin =
        static_cast<int>(std::ceil(2.0 * margin_scale_ * total)) + 6;
    return guard_ex() + margin;
  }

  /// Spectral band +-Lb of e^{i phi(t)} for one modulator, by convolving
  /// the per-harmonic expansions.  Orders beyond the band are dropped; the
  /// band is sized so the dropped mass is negligible at this margin scale.
  static std::vector<cplx> banded_coefficients(const std::vector<double>& p,
                                               int offset, int harmonics,
                                               int lb) {
    std::vector<cplx> a(static_cast<std::size_t>(2 * lb + 1), cplx(0, 0));
    a[static_cast<std::size_t>(lb)] = cplx(1.0, 0.0);
    std::vector<cplx> b(a.size());
    for (int h = 1; h <= harmonics; ++h) {
      const double amp = p[static_cast<std::size_t>(offset + h - 1)];
      const double ph = p[static_cast<std::size_t>(offset + harmonics + h - 1)];
      if (amp == 0.0) continue;
      const int jmax = std::min(
          lb / h, static_cast<int>(std::ceil(std::fabs(amp))) + 14);
      const auto jn = bessel_jn(jmax, amp);
      std::fill(b.begin(), b.end(), cplx(0.0, 0.0));
      for (int j = -jmax; j <= jmax; ++j) {
        const double jv = j >= 0 ? jn[static_cast<std::size_t>(j)]
                                 : (j % 2 == 0 ? 1.0 : -1.0) *
                                       jn[static_cast<std::size_t>(-j)];
        if (jv == 0.0) continue;
        const cplx w = jv * cplx(std::cos(j * ph), std::sin(j * ph));
        const int shift = h * j;
        const int mlo = std::max(-lb, -lb + shift);
        const int mhi = std::min(lb, lb + shift);
        for (int m = mlo; m <= mhi; ++m)
          b[static_cast<std::size_t>(m + lb)] +=
              w * a[static_cast<std::size_t>(m - shift + lb)];
      }
      a.swap(b);
    }
    // c_k multiplies e^{-i k w t}: c_k = A[-k], so reverse in place.
    std::reverse(a.begin(), a.end());
    return a;
  }

  double operator()(const std::vector<double>& p) {
    const int needed = scaled_guard(p);
    if (needed > guard_) guard_ = needed;
    const int hh = tpl_.harmonics;
    const int ext = guard_ex();
    const int band = guard_ - ext;  // per-cascade sideband reach
    const int lb = band + 8;
    const int wlo = tpl_.declared_lo - guard_;
    const int whi = tpl_.declared_hi + guard_;

    const std::vector<cplx> c1 = banded_coefficients(p, 0, hh, lb);
    const std::vector<cplx> c2 = banded_coefficients(p, 2 * hh, hh, lb);
    const auto at = [lb](const std::vector<cplx>& c, int k) {
      return c[static_cast<std::size_t>(k + lb)];
    };

    const std::size_t nb = distinct_bins_.size();
    CMat sub(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
    std::vector<cplx> mid(static_cast<std::size_t>(2 * lb + 1));
    for (std::size_t col = 0; col < nb; ++col) {
      const int src = distinct_bins_[col];
      // First modulator applied to a unit input is one coefficient column
      // (clipped to the window); the shaper phase rides along pointwise.
      const int mlo = std::max(wlo, src - lb);
      const int mhi = std::min(whi, src + lb);
      for (int m = mlo; m <= mhi; ++m) {
        const double ph = tpl_.shaper_phase(p, m);
        mid[static_cast<std::size_t>(m - src + lb)] =
            at(c1, m - src) * cplx(std::cos(ph), std::sin(ph));
      }
      for (std::size_t row = 0; row < nb; ++row) {
        const int dst = distinct_bins_[row];
        cplx acc(0.0, 0.0);
        const int lo2 = std::max(mlo, dst - lb);
        const int hi2 = std::min(mhi, dst + lb);
        for (int m = lo2; m <= hi2; ++m)
          acc += at(c2, dst - m) * mid[static_cast<std::size_t>(m - src + lb)];
        sub(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
            acc;
      }
    }

    // Lift the logical submatrix (tiny direct permanents).
    const std::size_t d = positions_.size();
    const int nphot = target_.photons;
    CMat wmat(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    std::vector<int> perm(static_cast<std::size_t>(nphot));
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        std::iota(perm.begin(), perm.end(), 0);
        cplx sum(0.0, 0.0);
        do {
          cplx prod(1.0, 0.0);
          for (int q = 0; q < nphot; ++q)
            prod *= sub(positions_[r][static_cast<std::size_t>(q)],
                        positions_[c][static_cast<std::size_t>(
                            perm[static_cast<std::size_t>(q)])]);
          sum += prod;
        } while (std::next_permutation(perm.begin(), perm.end()));
        wmat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            sum * prefactor_[r] * prefactor_[c];
      }
    }

    double f = 0.0, pw = 0.0;
    const double denom = target_.t.squaredNorm();
    pw = wmat.squaredNorm() / denom;
    if (pw > 0.0) f = std::norm(frob_inner(wmat, target_.t) / denom) / pw;
    return lambda_f_ * (1.0 - f) +
           lambda_p_ * std::max(0.0, p_target_ - pw);
  }

 private:
  const CircuitTemplate& tpl_;
  const TargetGate& target_;
  double lambda_f_, lambda_p_, p_target_;
  double margin_scale_;
  int guard_;
  std::vector<int> distinct_bins_;
  std::vector<std::vector<int>> positions_;
  std::vector<double> prefactor_;
};

}  // namespace

BoxSpec CircuitTemplate::bounds() const {
  BoxSpec b;
  const int hh = harmonics;
  for (int e = 0; e < 2; ++e) {
    for (int h = 0; h < hh; ++h) {
      b.lo.push_back(0.0);
      b.hi.push_back(2.0 * kPi);
    }
    for (int h = 0; h < hh; ++h) {
      b.lo.push_back(-kPi);
      b.hi.push_back(kPi);
    }
  }
  for (int c = 0; c < channels(); ++c) {
    b.lo.push_back(-kPi);
    b.hi.push_back(kPi);
  }
  return b;
}

double CircuitTemplate::shaper_phase(const std::vector<double>& params,
                                     int bin) const {
  const int clamped = std::clamp(bin, shaper_lo, shaper_hi);
  return params[static_cast<std::size_t>(4 * harmonics + clamped -
                                         shaper_lo)];
}

int CircuitTemplate::guard_for(const std::vector<double>& params) const {
  const double total = stage_weight(params, harmonics, 0) +
                       stage_weight(params, harmonics, 2 * harmonics);
  const int margin = static_cast<int>(std::ceil(2.0 * total)) + 6;
  const int ext = std::max({declared_lo - shaper_lo, shaper_hi - declared_hi,
                            0});
  return ext + margin;
}

QfpCircuit CircuitTemplate::instantiate(const std::vector<double>& params,
                                        int guard) const {
  if (params.size() != param_count())
    throw ConfigError("CircuitTemplate: parameter count mismatch");
  const int hh = harmonics;
  EomDrive d1, d2;
  for (int h = 1; h <= hh; ++h) {
    d1.harmonics.push_back({h, params[static_cast<std::size_t>(h - 1)],
                            params[static_cast<std::size_t>(hh + h - 1)]});
    d2.harmonics.push_back(
        {h, params[static_cast<std::size_t>(2 * hh + h - 1)],
         params[static_cast<std::size_t>(3 * hh + h - 1)]});
  }
  ShaperMask mask;
  mask.lo = shaper_lo;
  mask.phases.assign(params.begin() + 4 * hh, params.end());
  mask.extend = ShaperMask::Extend::Hold;

  QfpCircuit c;
  c.elements.push_back(CircuitElement::make_eom(std::move(d1)));
  c.elements.push_back(CircuitElement::make_shaper(std::move(mask)));
  c.elements.push_back(CircuitElement::make_eom(std::move(d2)));
  c.window = Window{declared_lo, declared_hi, guard};
  return c;
}

void CircuitTemplate::validate() const {
  if (harmonics < 1)
    throw ConfigError("CircuitTemplate: need at least one harmonic");
  if (shaper_hi < shaper_lo || declared_hi < declared_lo)
    throw ConfigError("CircuitTemplate: inverted bin ranges");
  if (!(p_target >= 0.0 && p_target <= 1.0))
    throw ConfigError("CircuitTemplate: p_target outside [0, 1]");
  if (starts < 1 || explore_iters < 1 || polish_iters < 0 ||
      polish_count < 1)
    throw ConfigError("CircuitTemplate: bad budget fields");
  // Window policy must hold even with every amplitude at its bound.
  std::vector<double> extreme(param_count(), 0.0);
  for (int e = 0; e < 2; ++e)
    for (int h = 0; h < harmonics; ++h)
      extreme[static_cast<std::size_t>(e * 2 * harmonics + h)] = 2.0 * kPi;
  const int g = guard_for(extreme);
  if (declared_hi - declared_lo + 1 + 2 * g > 4096)
    throw ConfigError(
        "CircuitTemplate: window at bound extremes exceeds the size cap");
}

nlohmann::json CircuitTemplate::to_json() const {
  return nlohmann::json{{"harmonics", harmonics},
                        {"shaper_lo", shaper_lo},
                        {"shaper_hi", shaper_hi},
                        {"declared_lo", declared_lo},
                        {"declared_hi", declared_hi},
                        {"p_target", p_target},
                        {"lambda_f", lambda_f},
                        {"lambda_p", lambda_p},
                        {"starts", starts},
                        {"explore_iters", explore_iters},
                        {"polish_iters", polish_iters},
                        {"polish_count", polish_count},
                        {"explore_retry", explore_retry}};
}

CircuitTemplate CircuitTemplate::from_json(const nlohmann::json& j) {
  require_keys(j,
               {"harmonics", "shaper_lo", "shaper_hi", "declared_lo",
                "declared_hi", "p_target", "lambda_f", "lambda_p", "starts",
                "explore_iters", "polish_iters", "polish_count",
                "explore_retry"},
               "circuit template");
  CircuitTemplate t;
  t.harmonics = get_required<int>(j, "harmonics", "template");
  t.shaper_lo = get_required<int>(j, "shaper_lo", "template");
  t.shaper_hi = get_required<int>(j, "shaper_hi", "template");
  t.declared_lo = get_required<int>(j, "declared_lo", "template");
  t.declared_hi = get_required<int>(j, "declared_hi", "template");
  t.p_target = get_required<double>(j, "p_target", "template");
  t.lambda_f = get_default<double>(j, "lambda_f", 1.0, "template");
  t.lambda_p = get_default<double>(j, "lambda_p", 1.0, "template");
  t.starts = get_default<int>(j, "starts", 32, "template");
  t.explore_iters = get_default<int>(j, "explore_iters", 120, "template");
  t.polish_iters = get_default<int>(j, "polish_iters", 400, "template");
  t.polish_count = get_default<int>(j, "polish_count", 3, "template");
  t.explore_retry = get_default<bool>(j, "explore_retry", false, "template");
  t.validate();
  return t;
}

CircuitTemplate CircuitTemplate::for_gate(const std::string& label,
                                          int order) {
  if (label == "hadamard") return for_gate("dft", 2);
  if (label == "tritter") return for_gate("dft", 3);
  if (label == "dft") {
    const int d = order;
    if (d < 2 || d > 10)
      throw ConfigError("CircuitTemplate: dft order must be in [2, 10]");
    CircuitTemplate t;
    t.harmonics = d - 1;
    t.shaper_lo = -(3 * d) / 2;
    t.shaper_hi = 4 * d - 1 - (3 * d) / 2;
    t.declared_lo = 0;
    t.declared_hi = d - 1;
    t.p_target = d == 2 ? 0.972 : d == 3 ? 0.9705 : 0.85;
    t.starts = d == 2 ? 32 : d == 3 ? 48 : d == 4 ? 128 : 512;
    t.polish_count = d <= 2 ? 3 : d <= 4 ? 8 : 12;
    t.explore_retry = d >= 3;
    if (d >= 3) t.explore_iters = 60;
    return t;
  }
  if (label == "cnot") {
    CircuitTemplate t;
    t.harmonics = 1;
    t.shaper_lo = -4;
    t.shaper_hi = 12;
    t.declared_lo = -4;
    t.declared_hi = 12;
    t.p_target = 0.0435;
    t.lambda_p = 2.0;
    t.starts = 320;
    t.polish_count = 6;
    return t;
  }
  throw ConfigError("CircuitTemplate: no canonical template for '" + label +
                    "'");
}

nlohmann::json SynthesisResult::to_json() const {
  nlohmann::json summaries = nlohmann::json::array();
  for (const auto& s : start_summaries)
    summaries.push_back({{"start", s.start},
                         {"objective", s.objective},
                         {"iters", s.iters},
                         {"evals", s.evals},
                         {"converged", s.converged}});
  return nlohmann::json{{"params", params},
                        {"fidelity", fidelity},
                        {"success", success},
                        {"objective", objective},
                        {"best_start", best_start},
                        {"seed", seed},
                        {"budget_exhausted", budget_exhausted},
                        {"trace", trace},
                        {"start_summaries", summaries},
                        {"circuit", circuit.to_json()}};
}

SynthesisResult synthesize(const CircuitTemplate& tpl,
                           const TargetGate& target,
                           const SynthesisOptions& opts) {
  tpl.validate();
  for (const auto& a : target.logical_assignments)
    for (int bin : a)
      if (bin < tpl.declared_lo || bin > tpl.declared_hi)
        throw ConfigError(
            "synthesize: target bin outside the template's declared window");

  const double lf = opts.lambda_fidelity > 0.0 ? opts.lambda_fidelity
                                               : tpl.lambda_f;
  const double lp = opts.lambda_success > 0.0 ? opts.lambda_success
                                              : tpl.lambda_p;
  const double ptgt = opts.p_target >= 0.0 ? opts.p_target : tpl.p_target;
  const int starts = opts.starts > 0 ? opts.starts : tpl.starts;
  const long long budget = opts.budget > 0 ? opts.budget : 8000000;
  const long long per_start =
      std::max<long long>(2000, budget / std::max(1, starts));

  const BoxSpec box = tpl.bounds();
  const std::size_t np = tpl.param_count();

  struct StartState {
    MinimizeResult explore;
    std::vector<double> trace;
    bool failed = false;
  };
  std::vector<StartState> states(static_cast<std::size_t>(starts));

#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < starts; ++s) {
    std::vector<double> x0(np, 0.0);
    if (s > 0) {
      Rng rng = Rng::substream(opts.seed, "synthesis-start", s);
      const int hh = tpl.harmonics;
      for (int e = 0; e < 2; ++e) {
        // Higher harmonics scatter proportionally farther per unit drive,
        // so draw them proportionally smaller to equalize sideband spread.
        for (int h = 0; h < hh; ++h)
          x0[static_cast<std::size_t>(e * 2 * hh + h)] =
              rng.uniform(0.05, 2.5 / (h + 1));
        for (int h = 0; h < hh; ++h)
          x0[static_cast<std::size_t>(e * 2 * hh + hh + h)] =
              rng.uniform(-kPi, kPi);
      }
      for (int c = 0; c < tpl.channels(); ++c)
        x0[static_cast<std::size_t>(4 * hh + c)] = rng.uniform(-kPi, kPi);
    }
    FastObjective obj(tpl, target, lf, lp, ptgt, 0.6);
    MinimizeOptions mo;
    mo.max_iters = tpl.explore_iters;
    mo.max_evals = per_start;
    mo.reset_retry = tpl.explore_retry;
    StartState& st = states[static_cast<std::size_t>(s)];
    try {
      st.explore = minimize_box(std::ref(obj), x0, box, mo);
      st.trace = st.explore.trace;
    } catch (const std::exception&) {
      st.failed = true;
      st.explore.f = std::numeric_limits<double>::infinity();
      st.explore.x = x0;
    }
  }

  // Polish the best exploration endpoints at full depth.
  std::vector<int> order(static_cast<std::size_t>(starts));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return states[static_cast<std::size_t>(a)].explore.f <
           states[static_cast<std::size_t>(b)].explore.f;
  });
  const int polish = std::min(tpl.polish_count, starts);

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < polish; ++k) {
    StartState& st = states[static_cast<std::size_t>(
        order[static_cast<std::size_t>(k)])];
    if (st.failed) continue;
    FastObjective obj(tpl, target, lf, lp, ptgt);
    MinimizeOptions mo;
    mo.max_iters = tpl.polish_iters;
    mo.max_evals = 4 * per_start;
    mo.gtol = 1e-10;
    try {
      const MinimizeResult r = minimize_box(std::ref(obj), st.explore.x, box, mo);
      if (r.f <= st.explore.f) {
        st.explore.x = r.x;
        st.explore.f = r.f;
        st.explore.iters += r.iters;
        st.explore.evals += r.evals;
        st.explore.converged = r.converged;
        st.explore.eval_capped = st.explore.eval_capped || r.eval_capped;
        st.trace.insert(st.trace.end(), r.trace.begin(), r.trace.end());
      }
    } catch (const std::exception&) {
      // Keep the exploration endpoint.
    }
  }

  int best = 0;
  for (int s = 1; s < starts; ++s)
    if (states[static_cast<std::size_t>(s)].explore.f <
        states[static_cast<std::size_t>(best)].explore.f)
      best = s;
  const StartState& win = states[static_cast<std::size_t>(best)];
  if (win.failed)
    throw ToleranceError("synthesize: every start failed to evaluate");

  SynthesisResult res;
  res.params = win.explore.x;
  res.best_start = best;
  res.seed = opts.seed;
  res.trace = win.trace;
  for (int s = 0; s < starts; ++s) {
    const auto& st = states[static_cast<std::size_t>(s)];
    res.start_summaries.push_back({s, st.explore.f, st.explore.iters,
                                   st.explore.evals, st.explore.converged});
    res.budget_exhausted = res.budget_exhausted || st.explore.eval_capped;
  }

  // Recompute the reported metrics from scratch through the full pipeline.
  QfpCircuit circuit =
      tpl.instantiate(res.params, tpl.guard_for(res.params));
  const ModeMatrix v = compose_circuit(circuit);
  circuit.window = v.window;  // keep any auto-grown guard
  res.circuit = circuit;
  FockBasis basis;
  basis.photons = target.photons;
  basis.modes = v.window.size();
  basis.states = target.fock_states(v.window);
  const FockTransfer w = fock_transfer(v, basis, basis);
  const FidelitySuccess fs = fidelity_success(w.w, target.t);
  res.fidelity = fs.fidelity;
  res.success = fs.success;
  res.objective = lf * (1.0 - fs.fidelity) +
                  lp * std::max(0.0, ptgt - fs.success);
  if (!(res.fidelity > 0.5))
    throw ToleranceError(
        "synthesize: infeasible — no start reached fidelity above 0.5");
  return res;
}

double calibrate_tunable_bs(double target_r_at_pi) {
  if (!(target_r_at_pi > 0.0 && target_r_at_pi <= 0.5))
    throw ConfigError("calibrate_tunable_bs: target must lie in (0, 0.5]");
  const auto r_norm = [](double theta) {
    const CMat w = tunable_bs_w(kPi, theta);
    const double cross = std::norm(w(0, 1));
    const double keep = std::norm(w(0, 0));
    return cross / (keep + cross);
  };
  double lo = 1e-9, hi = 4.0;
  const double flo = r_norm(lo) - target_r_at_pi;
  const double fhi = r_norm(hi) - target_r_at_pi;
  if (flo * fhi > 0.0)
    throw ConfigError(
        "calibrate_tunable_bs: target not bracketed on (0, 4]");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((r_norm(mid) - target_r_at_pi) * (r_norm(lo) - target_r_at_pi) <= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<DftScalingRow> dft_scaling_study(int d_max, std::uint64_t seed,
                                             long long budget_per_gate) {
  if (d_max < 2 || d_max > 10)
    throw ConfigError("dft_scaling_study: d_max must lie in [2, 10]");
  std::vector<DftScalingRow> rows;
  for (int d = 2; d <= d_max; ++d) {
    const CircuitTemplate tpl = CircuitTemplate::for_gate("dft", d);
    SynthesisOptions opts;
    opts.seed = Rng::derive_seed(seed, "dft-scaling", d);
    opts.budget = budget_per_gate;
    const SynthesisResult r = synthesize(tpl, target_gate("dft", d), opts);
    rows.push_back(
        {d, tpl.harmonics, tpl.channels(), r.fidelity, r.success});
  }
  return rows;
}

}  // namespace qfp
