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

#include "qfp/openbox.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "qfp/circuit.hpp"
#include "qfp/errors.hpp"
#include "qfp/linalg.hpp"
#include "qfp/rng.hpp"
#include "qfp/transfer.hpp"

namespace qfp {
namespace {

constexpr double kPi = std::numbers::pi;

ModeMatrix wrap(const CMat& u, int lo) {
  ModeMatrix v;
  v.m = u;
  v.window = Window{lo, lo + static_cast<int>(u.rows()) - 1, 0};
  return v;
}

/// Probes every window bin and scans consecutive pairs: the standard
/// characterization protocol used throughout these tests.
struct ProbeData {
  std::vector<SpectrumMeasurement> spectra;
  std::vector<FringeScan> scans;
};

ProbeData full_probe(const ModeMatrix& v, const ProbeNoise& noise, Rng& rng,
                     int grid_points = 16) {
  ProbeData d;
  const auto grid = uniform_phase_grid(grid_points);
  for (int i = 0; i < v.window.size(); ++i)
    d.spectra.push_back(simulate_single_bin_probe(v, v.window.bin_of(i), noise, rng));
  for (int i = 0; i + 1 < v.window.size(); ++i)
    d.scans.push_back(simulate_fringe_scan(v, v.window.bin_of(i),
                                           v.window.bin_of(i + 1), grid, noise, rng));
  return d;
}

/// Canonical form of a known matrix, for gauge-respecting comparisons.
ReconstructedMultiport canonical(const CMat& u, const std::vector<int>& bins,
                                 const std::vector<std::vector<bool>>& flags) {
  ReconstructedMultiport r;
  r.bins = bins;
  r.v = u;
  r.modulus_stderr = Eigen::MatrixXd::Zero(u.rows(), u.cols());
  r.phase_undefined = flags;
  gauge_fix(r);
  return r;
}

ReconstructedMultiport canonical(const CMat& u, const std::vector<int>& bins) {
  return canonical(u, bins,
                   std::vector<std::vector<bool>>(
                       u.rows(), std::vector<bool>(u.cols(), false)));
}

/// Orthogonal 3x3 with an exact zero at (2,0): product of two quarter-turn
/// Givens rotations.  Row 2's phase reference cannot sit in column 0, so
/// reconstruction must relay its phases through column 1.
CMat givens_with_zero() {
  const double s = std::sqrt(0.5);
  CMat u(3, 3);
  u << s, -0.5, 0.5, s, 0.5, -0.5, 0.0, s, s;
  return u;
}

TEST_CASE("noise tag names the model") {
  CHECK(ProbeNoise{}.tag() == "noiseless");
  CHECK(ProbeNoise{0.01, 1e-6}.tag() == "rel=0.01,floor=1e-06");
  CHECK_THROWS_AS((ProbeNoise{-0.1, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((ProbeNoise{0.0, -1e-9}.validate()), ConfigError);
}

TEST_CASE("single-bin probe returns one column of squared moduli") {
  Rng rng(1);
  const ProbeNoise clean;

  SUBCASE("identity routes all power to the probed bin") {
    const auto m = simulate_single_bin_probe(wrap(CMat::Identity(3, 3), -1), 0, clean, rng);
    REQUIRE(m.power.size() == 3);
    CHECK(m.power[0] == 0.0);
    CHECK(m.power[1] == 1.0);
    CHECK(m.power[2] == 0.0);
    CHECK(m.probe_bin == 0);
    CHECK(m.noise_tag == "noiseless");
  }

  SUBCASE("balanced two-port splits power evenly") {
    const auto m =
        simulate_single_bin_probe(wrap(target_gate("hadamard").t, 0), 0, clean, rng);
    CHECK(m.power[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.power[1] == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("balanced three-port splits power three ways") {
    const auto m =
        simulate_single_bin_probe(wrap(target_gate("tritter").t, 0), 1, clean, rng);
    for (int i = 0; i < 3; ++i)
      CHECK(m.power[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  SUBCASE("probe outside the window is rejected") {
    CHECK_THROWS_AS(
        simulate_single_bin_probe(wrap(CMat::Identity(2, 2), 0), 5, clean, rng),
        ConfigError);
  }

  SUBCASE("additive floor appears even in dark bins") {
    const ProbeNoise bg{0.0, 1e-4};
    const auto m = simulate_single_bin_probe(wrap(CMat::Identity(2, 2), 0), 0, bg, rng);
    CHECK(m.power[1] == doctest::Approx(1e-4).epsilon(1e-12));
  }

  SUBCASE("noise draws are reproducible per seed and powers stay non-negative") {
    const ProbeNoise loud{5.0, 0.0};
    Rng a(9), b(9);
    const auto m1 = simulate_single_bin_probe(wrap(target_gate("hadamard").t, 0), 0, loud, a);
    const auto m2 = simulate_single_bin_probe(wrap(target_gate("hadamard").t, 0), 0, loud, b);
    CHECK(m1.power == m2.power);
    for (double p : m1.power) CHECK(p >= 0.0);
    m1.validate();
  }
}

TEST_CASE("fringe scan traces interfere the two probed columns") {
  Rng rng(1);
  const ProbeNoise clean;
  const auto grid = uniform_phase_grid(16);
  const ModeMatrix vh = wrap(target_gate("hadamard").t, 0);

  SUBCASE("balanced two-port gives (1 + cos phi)/2 at output 0") {
    const auto scan = simulate_fringe_scan(vh, 0, 1, grid, clean, rng);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      CHECK(scan.trace[0][j] ==
            doctest::Approx(0.5 * (1.0 + std::cos(grid[j]))).epsilon(1e-12));
      CHECK(scan.trace[1][j] ==
            doctest::Approx(0.5 * (1.0 - std::cos(grid[j]))).epsilon(1e-12));
    }
  }

  SUBCASE("unitary scattering conserves the probe power at every phase") {
    const ModeMatrix vt = wrap(target_gate("tritter").t, 0);
    const auto scan = simulate_fringe_scan(vt, 0, 2, grid, clean, rng);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      double total = 0.0;
      for (int i = 0; i < 3; ++i) total += scan.trace[i][j];
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("balanced three-port fringes peak a third of a turn apart") {
    const ModeMatrix vt = wrap(target_gate("tritter").t, 0);
    const auto scan = simulate_fringe_scan(vt, 0, 1, grid, clean, rng);
    std::vector<double> peaks;
    for (int m = 0; m < 3; ++m) {
      const auto fit = fit_fringe(scan.phase, scan.trace[m]);
      double peak = std::atan2(fit.amp_sin, fit.amp_cos);
      if (peak < 0) peak += 2 * kPi;
      peaks.push_back(peak);
    }
    std::sort(peaks.begin(), peaks.end());
    CHECK(peaks[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(peaks[1] == doctest::Approx(2 * kPi / 3).epsilon(1e-9));
    CHECK(peaks[2] == doctest::Approx(4 * kPi / 3).epsilon(1e-9));
  }

  SUBCASE("bad probe pairs are rejected") {
    CHECK_THROWS_AS(simulate_fringe_scan(vh, 0, 0, grid, clean, rng), ConfigError);
    CHECK_THROWS_AS(simulate_fringe_scan(vh, 0, 7, grid, clean, rng), ConfigError);
  }
}

TEST_CASE("phase grids are validated") {
  CHECK_THROWS_AS(uniform_phase_grid(7), ConfigError);
  const auto g = uniform_phase_grid(8);
  REQUIRE(g.size() == 8);
  CHECK(g.front() == 0.0);
  CHECK(g.back() < 2 * kPi);

  Rng rng(1);
  const ModeMatrix vh = wrap(target_gate("hadamard").t, 0);
  std::vector<double> bad = g;
  bad[3] = bad[2];  // not strictly increasing
  CHECK_THROWS_AS(simulate_fringe_scan(vh, 0, 1, bad, {}, rng), ConfigError);
  bad = g;
  bad.back() = 2 * kPi;  // outside [0, 2*pi)
  CHECK_THROWS_AS(simulate_fringe_scan(vh, 0, 1, bad, {}, rng), ConfigError);
  CHECK_THROWS_AS(simulate_fringe_scan(vh, 0, 1, {0.0, 1.0, 2.0}, {}, rng), ConfigError);
}

TEST_CASE("sinusoid fit recovers exact coefficients") {
  const auto grid = uniform_phase_grid(12);
  std::vector<double> y(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    y[j] = 0.7 + 0.2 * std::cos(grid[j]) - 0.35 * std::sin(grid[j]);
  const auto fit = fit_fringe(grid, y);
  CHECK(fit.offset == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fit.amp_cos == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(fit.amp_sin == doctest::Approx(-0.35).epsilon(1e-12));
  CHECK(fit.residual_rms <= 1e-12);

  CHECK_THROWS_AS(fit_fringe(grid, std::vector<double>(5, 0.0)), ConfigError);
  CHECK_THROWS_AS(fit_fringe({0, 1, 2, 3, 4, 5, 6}, std::vector<double>(7, 0.0)),
                  ConfigError);
}

TEST_CASE("fringe visibility from the fitted sinusoid") {
  Rng rng(1);
  const auto grid = uniform_phase_grid(16);
  const ModeMatrix vh = wrap(target_gate("hadamard").t, 0);

  SUBCASE("balanced interference has unit visibility") {
    const auto scan = simulate_fringe_scan(vh, 0, 1, grid, {}, rng);
    CHECK(fringe_visibility(scan, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fringe_visibility(scan, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("an additive background b rescales visibility to 1/(1+2b)") {
    const double b = 0.05;
    const auto scan = simulate_fringe_scan(vh, 0, 1, grid, ProbeNoise{0.0, b}, rng);
    CHECK(fringe_visibility(scan, 0) == doctest::Approx(1.0 / (1.0 + 2 * b)).epsilon(1e-12));
  }

  SUBCASE("non-interfering columns give zero visibility") {
    const auto scan =
        simulate_fringe_scan(wrap(CMat::Identity(2, 2), 0), 0, 1, grid, {}, rng);
    CHECK(fringe_visibility(scan, 0) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("a dark trace has no defined visibility") {
    const auto scan =
        simulate_fringe_scan(wrap(CMat::Identity(3, 3), 0), 0, 1, grid, {}, rng);
    CHECK_THROWS_AS(fringe_visibility(scan, 2), ToleranceError);
  }
}

TEST_CASE("noiseless reconstruction is exact") {
  Rng rng(3);
  const ProbeNoise clean;

  SUBCASE("balanced two-port") {
    const CMat t = target_gate("hadamard").t;
    const auto d = full_probe(wrap(t, 0), clean, rng);
    const auto rec = reconstruct_multiport(d.spectra, d.scans, {});
    CHECK(max_abs_diff(rec.v, t) < 1e-8);
    CHECK(rec.bins == std::vector<int>{0, 1});
    for (const auto& row : rec.phase_undefined)
      for (bool f : row) CHECK_FALSE(f);
    CHECK(rec.modulus_stderr.maxCoeff() == 0.0);
  }

  SUBCASE("balanced three-port, including its lifted fidelity") {
    const CMat t = target_gate("tritter").t;
    const auto d = full_probe(wrap(t, 0), clean, rng);
    const auto rec = reconstruct_multiport(d.spectra, d.scans, {});
    CHECK(max_abs_diff(rec.v, t) < 1e-8);
    CHECK(fidelity_success(rec.v, t).fidelity >= 1.0 - 1e-8);
  }

  SUBCASE("random dense unitaries on 2..6 bins, compared up to gauge") {
    for (int m = 2; m <= 6; ++m) {
      Rng hr = Rng::substream(7, "haar", m);
      const CMat u = haar_unitary(m, hr);
      const auto d = full_probe(wrap(u, -1), clean, rng);
      const auto rec = reconstruct_multiport(d.spectra, d.scans, {});
      const auto truth = canonical(u, rec.bins);
      CHECK(max_abs_diff(rec.v, truth.v) < 1e-8);
    }
  }
}

TEST_CASE("reconstruction under relative power noise") {
  Rng rng(5);
  const ProbeNoise noisy{0.01, 0.0};
  ReconstructOptions opts;
  opts.assumed_sigma_rel = 0.01;

  double fmin = 1.0;
  double emax = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Rng hr = Rng::substream(11, "haar-noisy", trial);
    const CMat u = haar_unitary(4, hr);
    const auto d = full_probe(wrap(u, 0), noisy, rng);
    const auto rec = reconstruct_multiport(d.spectra, d.scans, opts);
    const auto truth = canonical(u, rec.bins);
    fmin = std::min(fmin, fidelity_success(rec.v, truth.v).fidelity);
    emax = std::max(emax, max_abs_diff(rec.v, truth.v));

    // Propagated modulus errors follow the assumed model exactly.
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        if (rec.phase_undefined[r][c]) continue;
        const double m = std::abs(rec.v(r, c));
        CHECK(rec.modulus_stderr(r, c) ==
              doctest::Approx(opts.assumed_sigma_rel * m / 2.0).epsilon(1e-9));
      }
  }
  CHECK(fmin >= 0.999);
  CHECK(emax < 10 * noisy.sigma_rel);
}

TEST_CASE("an exactly dark entry is flagged and phases relay around it") {
  Rng rng(6);
  const CMat u = givens_with_zero();
  REQUIRE(max_abs_diff(u.adjoint() * u, CMat::Identity(3, 3)) < 1e-12);

  const auto grid = uniform_phase_grid(16);
  const ModeMatrix v = wrap(u, 0);
  std::vector<SpectrumMeasurement> spectra;
  for (int b = 0; b < 3; ++b)
    spectra.push_back(simulate_single_bin_probe(v, b, {}, rng));
  std::vector<FringeScan> scans{simulate_fringe_scan(v, 0, 1, grid, {}, rng),
                                simulate_fringe_scan(v, 1, 2, grid, {}, rng)};
  auto rec = reconstruct_multiport(spectra, scans, {});

  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      CHECK(rec.phase_undefined[r][c] == (r == 2 && c == 0));

  const auto truth = canonical(u, rec.bins, rec.phase_undefined);
  CHECK(max_abs_diff(rec.v, truth.v) < 1e-12);

  SUBCASE("gauge fixing is idempotent and preserves fidelity metrics") {
    const CMat before = rec.v;
    const double f_before = fidelity_success(rec.v, truth.v).fidelity;
    gauge_fix(rec);
    CHECK(max_abs_diff(before, rec.v) == 0.0);
    const double f_after = fidelity_success(rec.v, truth.v).fidelity;
    CHECK(std::abs(f_after - f_before) <= 1e-12);
    gauge_fix(rec);
    CHECK(max_abs_diff(before, rec.v) == 0.0);
  }
}

TEST_CASE("gauge convention: first probed row and column end real non-negative") {
  Rng hr(21);
  const CMat u = haar_unitary(5, hr);
  const auto rec = canonical(u, {0, 1, 2, 3, 4});
  for (int c = 0; c < 5; ++c) {
    CHECK(rec.v(0, c).imag() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rec.v(0, c).real() >= 0.0);
  }
  for (int r = 0; r < 5; ++r) {
    CHECK(rec.v(r, 0).imag() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rec.v(r, 0).real() >= 0.0);
  }
  // Moduli are untouched by the gauge.
  CHECK(max_abs_diff(CMat(rec.v.cwiseAbs()), CMat(u.cwiseAbs())) < 1e-12);
}

TEST_CASE("reconstruction error paths") {
  Rng rng(8);
  const ProbeNoise clean;
  const auto grid = uniform_phase_grid(16);
  const ModeMatrix vh = wrap(target_gate("hadamard").t, 0);

  SUBCASE("diagonal multiport has a disconnected phase graph") {
    const auto d = full_probe(wrap(CMat::Identity(3, 3), 0), clean, rng);
    CHECK_THROWS_WITH_AS(reconstruct_multiport(d.spectra, d.scans, {}),
                         doctest::Contains("disconnected"), ConfigError);
  }

  SUBCASE("a missing scan leaves columns unreachable") {
    const auto d = full_probe(wrap(target_gate("tritter").t, 0), clean, rng);
    std::vector<FringeScan> one{d.scans[0]};
    CHECK_THROWS_WITH_AS(reconstruct_multiport(d.spectra, one, {}),
                         doctest::Contains("disconnected"), ConfigError);
  }

  SUBCASE("a corrupted trace fails the sinusoid fit") {
    auto d = full_probe(vh, clean, rng);
    d.scans[0].trace[0][3] += 0.2;
    CHECK_THROWS_AS(reconstruct_multiport(d.spectra, d.scans, {}), ToleranceError);
  }

  SUBCASE("a scan probing a bin without a spectrum is rejected") {
    const auto d = full_probe(wrap(target_gate("tritter").t, 0), clean, rng);
    std::vector<SpectrumMeasurement> two{d.spectra[0], d.spectra[1]};
    CHECK_THROWS_AS(reconstruct_multiport(two, d.scans, {}), ConfigError);
  }

  SUBCASE("duplicate spectra for one bin are rejected") {
    auto d = full_probe(vh, clean, rng);
    d.spectra.push_back(d.spectra[0]);
    CHECK_THROWS_AS(reconstruct_multiport(d.spectra, d.scans, {}), ConfigError);
  }

  SUBCASE("mismatched windows are rejected") {
    auto d = full_probe(vh, clean, rng);
    auto other = full_probe(wrap(target_gate("tritter").t, 0), clean, rng);
    std::vector<FringeScan> mixed{other.scans[0]};
    CHECK_THROWS_AS(reconstruct_multiport(d.spectra, mixed, {}), ConfigError);
    d.spectra[1].window = Window{0, 2, 0};
    d.spectra[1].power.resize(3, 0.0);
    CHECK_THROWS_AS(reconstruct_multiport(d.spectra, d.scans, {}), ConfigError);
  }

  SUBCASE("no spectra at all") {
    CHECK_THROWS_AS(reconstruct_multiport({}, {}, {}), ConfigError);
  }

  SUBCASE("negative assumed noise scales are rejected") {
    const auto d = full_probe(vh, clean, rng);
    ReconstructOptions bad;
    bad.assumed_sigma_rel = -0.01;
    CHECK_THROWS_AS(reconstruct_multiport(d.spectra, d.scans, bad), ConfigError);
  }

  SUBCASE("a background floor can mask all interference") {
    // Near-diagonal multiport: the off-diagonal powers sit below the assumed
    // background, so every cross entry is flagged and no fringe connects the
    // two columns.
    const double eps = 1e-3;
    CMat u(2, 2);
    u << std::cos(eps), -std::sin(eps), std::sin(eps), std::cos(eps);
    const ProbeNoise bg{0.0, 1e-4};
    auto d = full_probe(wrap(u, 0), bg, rng);
    ReconstructOptions opts;
    opts.assumed_floor = 1e-4;
    CHECK_THROWS_WITH_AS(reconstruct_multiport(d.spectra, d.scans, opts),
                         doctest::Contains("disconnected"), ConfigError);
  }
}

TEST_CASE("gauge_fix validates shapes") {
  ReconstructedMultiport r;
  r.bins = {0, 1};
  r.v = CMat::Identity(2, 2);
  r.modulus_stderr = Eigen::MatrixXd::Zero(2, 2);
  r.phase_undefined = {{false, false}};
  CHECK_THROWS_AS(gauge_fix(r), ConfigError);
  r.phase_undefined = {{false, false}, {false}};
  CHECK_THROWS_AS(gauge_fix(r), ConfigError);
}

TEST_CASE("measurement CSV round trips preserve every value") {
  Rng rng(4);
  const ProbeNoise noisy{0.01, 1e-6};
  const ModeMatrix vh = wrap(target_gate("hadamard").t, 0);

  SUBCASE("spectrum") {
    const auto sp = simulate_single_bin_probe(vh, 1, noisy, rng);
    const auto sp2 = SpectrumMeasurement::from_csv(sp.to_csv());
    CHECK(sp2.probe_bin == sp.probe_bin);
    CHECK(sp2.noise_tag == sp.noise_tag);
    CHECK(sp2.power == sp.power);
    CHECK(sp2.window.lo == sp.window.lo);
    CHECK(sp2.to_csv() == sp.to_csv());
  }

  SUBCASE("fringe scan") {
    const auto sc = simulate_fringe_scan(vh, 0, 1, uniform_phase_grid(9), noisy, rng);
    const auto sc2 = FringeScan::from_csv(sc.to_csv());
    CHECK(sc2.phase == sc.phase);
    CHECK(sc2.trace == sc.trace);
    CHECK(sc2.probe_lo == 0);
    CHECK(sc2.probe_hi == 1);
    CHECK(sc2.to_csv() == sc.to_csv());
  }

  SUBCASE("malformed inputs are rejected") {
    const auto sp = simulate_single_bin_probe(vh, 0, {}, rng);
    const std::string good = sp.to_csv();
    CHECK_THROWS_AS(SpectrumMeasurement::from_csv(""), ConfigError);
    CHECK_THROWS_AS(SpectrumMeasurement::from_csv("# qfp-fringe x=1\nbin,power\n"),
                    ConfigError);
    CHECK_THROWS_AS(SpectrumMeasurement::from_csv(good + "0,0.5\n"), ConfigError);
    std::string truncated = good.substr(0, good.rfind("1,"));
    CHECK_THROWS_AS(SpectrumMeasurement::from_csv(truncated), ConfigError);
    std::string garbled = good;
    garbled.replace(garbled.find(",0."), 3, ",zz");
    CHECK_THROWS_AS(SpectrumMeasurement::from_csv(garbled), ConfigError);

    const auto sc = simulate_fringe_scan(vh, 0, 1, uniform_phase_grid(9), {}, rng);
    std::string bad_header = sc.to_csv();
    bad_header.replace(bad_header.find("p_0"), 3, "p_9");
    CHECK_THROWS_AS(FringeScan::from_csv(bad_header), ConfigError);
  }
}

TEST_CASE("reconstruction JSON round trip") {
  Rng rng(12);
  const auto d = full_probe(wrap(target_gate("tritter").t, 0), ProbeNoise{0.005, 0.0}, rng);
  ReconstructOptions opts;
  opts.assumed_sigma_rel = 0.005;
  const auto rec = reconstruct_multiport(d.spectra, d.scans, opts);

  const auto j = rec.to_json();
  const auto rec2 = ReconstructedMultiport::from_json(j);
  CHECK(rec2.bins == rec.bins);
  CHECK(max_abs_diff(rec2.v, rec.v) == 0.0);
  CHECK((rec2.modulus_stderr - rec.modulus_stderr).cwiseAbs().maxCoeff() == 0.0);
  CHECK(rec2.phase_undefined == rec.phase_undefined);
  CHECK(rec2.gauge == rec.gauge);

  auto bad = j;
  bad["extra"] = 1;
  CHECK_THROWS_AS(ReconstructedMultiport::from_json(bad), ConfigError);
  bad = j;
  bad.erase("gauge");
  CHECK_THROWS_AS(ReconstructedMultiport::from_json(bad), ConfigError);
  bad = j;
  bad["bins"] = std::vector<int>{0, 1};
  CHECK_THROWS_AS(ReconstructedMultiport::from_json(bad), ConfigError);
}

TEST_CASE("reconstruction is deterministic for fixed inputs") {
  Rng rng(14);
  const auto d = full_probe(wrap(target_gate("tritter").t, 0), ProbeNoise{0.01, 0.0}, rng);
  ReconstructOptions opts;
  opts.assumed_sigma_rel = 0.01;
  const auto a = reconstruct_multiport(d.spectra, d.scans, opts);
  const auto b = reconstruct_multiport(d.spectra, d.scans, opts);
  CHECK(max_abs_diff(a.v, b.v) == 0.0);
  CHECK(a.phase_undefined == b.phase_undefined);
}

}  // namespace
}  // namespace qfp
