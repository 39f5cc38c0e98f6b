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

#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "qfp/circuit.hpp"
#include "qfp/errors.hpp"
#include "qfp/fock.hpp"
#include "qfp/transfer.hpp"

using qfp::calibrate_tunable_bs;
using qfp::CircuitTemplate;
using qfp::CMat;
using qfp::SynthesisOptions;
using qfp::SynthesisResult;
using qfp::synthesize;
using qfp::TargetGate;
using qfp::target_gate;
using qfp::tunable_bs_w;

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Postselected splitter reflectivity at shaper step alpha.
double r_norm(double alpha, double theta) {
  const CMat w = tunable_bs_w(alpha, theta);
  const double cross = std::norm(w(0, 1));
  const double keep = std::norm(w(0, 0));
  return cross / (keep + cross);
}

}  // namespace

TEST_CASE("calibration at target 1/2 equalizes the postselected splitter") {
  const double theta = calibrate_tunable_bs(0.5);
  // Root of R(pi; theta) = 1/2 on the monotone branch, located by an
  // independent high-precision bisection of the same closed form.
  CHECK(std::fabs(theta - 0.828752032792452) < 1e-9);
  CHECK(std::fabs(r_norm(kPi, theta) - 0.5) < 1e-9);

  // At the calibrated point the alpha = pi splitter is an exact 50/50, so
  // its fidelity against the balanced gate is 1 up to roundoff.
  const auto fs =
      qfp::fidelity_success(tunable_bs_w(kPi, theta), target_gate("hadamard").t);
  CHECK(fs.fidelity >= 1.0 - 1e-6);
  CHECK(fs.success > 0.9);
  CHECK(fs.success < 1.0);
}

TEST_CASE("calibrated alpha sweep reproduces the published reflectivities") {
  const double theta = calibrate_tunable_bs(0.5);
  const double expected[] = {0.0, 0.123, 0.373, 0.5};
  const double alphas[] = {0.0, kPi / 3.0, 2.0 * kPi / 3.0, kPi};
  for (int i = 0; i < 4; ++i)
    CHECK(std::fabs(r_norm(alphas[i], theta) - expected[i]) < 0.01);
  // alpha = 0 leaves the splitter transparent: no cross term at all.
  CHECK(std::norm(tunable_bs_w(0.0, theta)(0, 1)) == 0.0);
}

TEST_CASE("calibration round-trips across the monotone branch") {
  for (const double r : {0.1, 0.25, 0.4, 0.5}) {
    const double theta = calibrate_tunable_bs(r);
    CHECK(std::fabs(r_norm(kPi, theta) - r) < 1e-9);
  }
}

TEST_CASE("calibration rejects unreachable or ill-posed targets") {
  CHECK_THROWS_AS(calibrate_tunable_bs(0.0), qfp::ConfigError);
  CHECK_THROWS_AS(calibrate_tunable_bs(-0.1), qfp::ConfigError);
  CHECK_THROWS_AS(calibrate_tunable_bs(0.51), qfp::ConfigError);
}

TEST_CASE("identity target from the all-zero start yields the null circuit") {
  const CircuitTemplate tpl = CircuitTemplate::for_gate("hadamard");
  SynthesisOptions opts;
  opts.starts = 1;  // start 0 is always the all-zero point
  const SynthesisResult res = synthesize(tpl, target_gate("identity", 2), opts);
  CHECK(res.best_start == 0);
  CHECK(res.fidelity > 1.0 - 1e-9);
  CHECK(res.success > 1.0 - 1e-9);
  for (const double p : res.params) CHECK(std::fabs(p) < 1e-9);
}

TEST_CASE("balanced-gate synthesis meets the design marks") {
  const CircuitTemplate tpl = CircuitTemplate::for_gate("hadamard");
  const TargetGate target = target_gate("hadamard");
  const SynthesisResult res = synthesize(tpl, target);
  CHECK(res.fidelity >= 0.9999);
  CHECK(res.success >= 0.97);
  CHECK_FALSE(res.budget_exhausted);
  CHECK(res.start_summaries.size() == 32);
  CHECK(res.trace.size() >= 2);

  SUBCASE("reported metrics equal a from-scratch recomputation") {
    const qfp::ModeMatrix v = qfp::compose_circuit(res.circuit);
    qfp::FockBasis basis;
    basis.photons = target.photons;
    basis.modes = v.window.size();
    basis.states = target.fock_states(v.window);
    const qfp::FockTransfer w = qfp::fock_transfer(v, basis, basis);
    const auto fs = qfp::fidelity_success(w.w, target.t);
    CHECK(std::fabs(fs.fidelity - res.fidelity) < 1e-12);
    CHECK(std::fabs(fs.success - res.success) < 1e-12);
  }

  SUBCASE("the emitted circuit is a three-element cascade on the window") {
    REQUIRE(res.circuit.elements.size() == 3);
    CHECK(res.circuit.window.lo == 0);
    CHECK(res.circuit.window.hi == 1);
  }
}

TEST_CASE("synthesis is bit-reproducible for a fixed seed") {
  const CircuitTemplate tpl = CircuitTemplate::for_gate("hadamard");
  SynthesisOptions opts;
  opts.seed = 7;
  const SynthesisResult a = synthesize(tpl, target_gate("hadamard"), opts);
  const SynthesisResult b = synthesize(tpl, target_gate("hadamard"), opts);
  CHECK(a.fidelity == b.fidelity);
  CHECK(a.success == b.success);
  CHECK(a.best_start == b.best_start);
  REQUIRE(a.params.size() == b.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i)
    CHECK(a.params[i] == b.params[i]);
}

TEST_CASE("objective is invariant under a global phase of the target") {
  const CircuitTemplate tpl = CircuitTemplate::for_gate("hadamard");
  TargetGate rotated = target_gate("hadamard");
  rotated.t *= std::complex<double>(std::cos(0.7), std::sin(0.7));
  const SynthesisResult plain = synthesize(tpl, target_gate("hadamard"));

  // The scored metrics of any fixed candidate do not see the phase...
  const qfp::ModeMatrix v = qfp::compose_circuit(plain.circuit);
  qfp::FockBasis basis;
  basis.photons = 1;
  basis.modes = v.window.size();
  basis.states = rotated.fock_states(v.window);
  const CMat w = qfp::fock_transfer(v, basis, basis).w;
  const auto fs0 = qfp::fidelity_success(w, target_gate("hadamard").t);
  const auto fs1 = qfp::fidelity_success(w, rotated.t);
  CHECK(std::fabs(fs0.fidelity - fs1.fidelity) < 1e-14);
  CHECK(std::fabs(fs0.success - fs1.success) < 1e-14);

  // ...so a full search against the rotated target lands just as well.
  const SynthesisResult phased = synthesize(tpl, rotated);
  CHECK(phased.fidelity >= 0.9999);
  CHECK(phased.success >= 0.97);
}

TEST_CASE("structurally degenerate targets raise the infeasibility error") {
  // Both logical states ride the same bin, so every candidate's lifted
  // matrix has identical columns and fidelity is pinned at exactly 1/2.
  TargetGate degenerate;
  degenerate.label = "degenerate";
  degenerate.t = CMat::Identity(2, 2);
  degenerate.photons = 1;
  degenerate.logical_assignments = {{0}, {0}};
  const CircuitTemplate tpl = CircuitTemplate::for_gate("hadamard");
  SynthesisOptions opts;
  opts.starts = 4;
  CHECK_THROWS_AS(synthesize(tpl, degenerate, opts), qfp::ToleranceError);
}

TEST_CASE("targets outside the declared window are rejected") {
  CHECK_THROWS_AS(
      synthesize(CircuitTemplate::for_gate("hadamard"), target_gate("cnot")),
      qfp::ConfigError);
}

TEST_CASE("canonical template table") {
  for (int d = 2; d <= 5; ++d) {
    const CircuitTemplate t = CircuitTemplate::for_gate("dft", d);
    CHECK(t.harmonics == d - 1);
    CHECK(t.channels() == 4 * d);
    CHECK(t.declared_lo == 0);
    CHECK(t.declared_hi == d - 1);
    CHECK(t.param_count() ==
          static_cast<std::size_t>(4 * (d - 1) + 4 * d));
    CHECK_NOTHROW(t.validate());
  }
  const CircuitTemplate h = CircuitTemplate::for_gate("hadamard");
  const CircuitTemplate d2 = CircuitTemplate::for_gate("dft", 2);
  CHECK(h.harmonics == d2.harmonics);
  CHECK(h.shaper_lo == d2.shaper_lo);
  CHECK(h.shaper_hi == d2.shaper_hi);
  CHECK(h.p_target == d2.p_target);

  const CircuitTemplate cnot = CircuitTemplate::for_gate("cnot");
  CHECK(cnot.harmonics == 1);
  CHECK(cnot.declared_lo == -4);
  CHECK(cnot.declared_hi == 12);
  CHECK(cnot.shaper_lo == -4);
  CHECK(cnot.shaper_hi == 12);

  CHECK_THROWS_AS(CircuitTemplate::for_gate("dft", 1), qfp::ConfigError);
  CHECK_THROWS_AS(CircuitTemplate::for_gate("dft", 11), qfp::ConfigError);
  CHECK_THROWS_AS(CircuitTemplate::for_gate("bogus"), qfp::ConfigError);
}

TEST_CASE("template JSON round trip is exact and strictly keyed") {
  const CircuitTemplate t = CircuitTemplate::for_gate("tritter");
  const nlohmann::json j = t.to_json();
  const CircuitTemplate u = CircuitTemplate::from_json(j);
  CHECK(u.harmonics == t.harmonics);
  CHECK(u.shaper_lo == t.shaper_lo);
  CHECK(u.shaper_hi == t.shaper_hi);
  CHECK(u.declared_lo == t.declared_lo);
  CHECK(u.declared_hi == t.declared_hi);
  CHECK(u.p_target == t.p_target);
  CHECK(u.starts == t.starts);
  CHECK(u.explore_retry == t.explore_retry);

  nlohmann::json bad = j;
  bad["surprise"] = 1;
  CHECK_THROWS_AS(CircuitTemplate::from_json(bad), qfp::ConfigError);

  nlohmann::json inverted = j;
  inverted["declared_lo"] = 5;
  inverted["declared_hi"] = 1;
  CHECK_THROWS_AS(CircuitTemplate::from_json(inverted), qfp::ConfigError);
}

TEST_CASE("guard grows with drive strength and instantiation is checked") {
  const CircuitTemplate t = CircuitTemplate::for_gate("hadamard");
  std::vector<double> weak(t.param_count(), 0.0);
  std::vector<double> strong(t.param_count(), 0.0);
  strong[0] = 5.0;
  strong[2 * t.harmonics] = 5.0;
  CHECK(t.guard_for(strong) > t.guard_for(weak));
  CHECK_THROWS_AS(t.instantiate({1.0, 2.0}, 4), qfp::ConfigError);
}

TEST_CASE("scaling study rejects out-of-range depths") {
  CHECK_THROWS_AS(qfp::dft_scaling_study(1), qfp::ConfigError);
  CHECK_THROWS_AS(qfp::dft_scaling_study(11), qfp::ConfigError);
}
