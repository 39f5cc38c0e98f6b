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

#include "qfp/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "doctest.h"
#include "qfp/channel.hpp"
#include "qfp/counts.hpp"
#include "qfp/errors.hpp"
#include "qfp/linalg.hpp"
#include "qfp/rng.hpp"
#include "qfp/serialize.hpp"
#include "qfp/transfer.hpp"

using namespace qfp;

namespace {

// Splitter angle at which the balanced-coupler circuit hits its
// deepest-split working point (shared with the circuit tests).
constexpr double kThetaStar = 0.828752032792452;

Eigen::VectorXd latents_from(std::uint64_t seed, int n) {
  Rng rng(seed);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

double sample_mean(const std::vector<Eigen::VectorXd>& s, int coord) {
  double m = 0.0;
  for (const auto& z : s) m += z[coord];
  return m / static_cast<double>(s.size());
}

double sample_cov(const std::vector<Eigen::VectorXd>& s, int a, int b) {
  const double ma = sample_mean(s, a), mb = sample_mean(s, b);
  double c = 0.0;
  for (const auto& z : s) c += (z[a] - ma) * (z[b] - mb);
  return c / static_cast<double>(s.size());
}

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i] <= y[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / x.size() -
                              static_cast<double>(j) / y.size()));
  }
  return d;
}

DetectorModel desk_detector() {
  DetectorModel det;
  det.efficiency = 0.8;
  det.dark_prob = 1.5e-7;
  det.frame_seconds = 1.5e-9;
  det.integration_seconds = 1.0;
  return det;
}

/// The monitored 4x4 block (control-0, control-1, target-0, target-1) of a
/// nine-bin multiport on the canonical gate layout.
CMat corner_of(const CMat& v9) {
  const int bins[4] = {0, 6, 7, 8};
  CMat c(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) c(i, j) = v9(bins[i], bins[j]);
  return c;
}

/// exp(i*eps*H) * reference multiport for a seeded random Hermitian H.
ModeMatrix perturbed_cnot(double eps, std::uint64_t seed) {
  const ModeMatrix ref = cnot_reference_multiport();
  Rng rng(seed);
  CMat h(9, 9);
  for (int i = 0; i < 9; ++i) {
    h(i, i) = rng.normal();
    for (int j = i + 1; j < 9; ++j) {
      h(i, j) = rng.cgauss() / std::sqrt(2.0);
      h(j, i) = std::conj(h(i, j));
    }
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  Eigen::VectorXcd phase(9);
  for (int i = 0; i < 9; ++i)
    phase[i] = std::polar(1.0, eps * es.eigenvalues()[i]);
  ModeMatrix out = ref;
  out.m = es.eigenvectors() * phase.asDiagonal() *
          es.eigenvectors().adjoint() * ref.m;
  return out;
}

}  // namespace

TEST_CASE("slice sampler") {
  SUBCASE("standard normal moments") {
    auto lt = [](const Eigen::VectorXd& z) { return -0.5 * z[0] * z[0]; };
    for (std::uint64_t seed : {101ULL, 202ULL, 303ULL}) {
      const LatentChain ch =
          slice_sample(lt, Eigen::VectorXd::Zero(1), 10000, seed, {});
      REQUIRE(ch.samples.size() == 10000);
      CHECK(std::fabs(sample_mean(ch.samples, 0)) < 4.0 / std::sqrt(10000.0));
      CHECK(sample_cov(ch.samples, 0, 0) == doctest::Approx(1.0).epsilon(0.2));
      CHECK(ch.diagnostics.acceptance == 1.0);
      CHECK_FALSE(ch.diagnostics.mixing_warning);
    }
  }

  SUBCASE("correlated gaussian covariance") {
    const double r = 0.8, det = 1.0 - r * r;
    auto lt = [=](const Eigen::VectorXd& z) {
      return -0.5 / det *
             (z[0] * z[0] - 2.0 * r * z[0] * z[1] + z[1] * z[1]);
    };
    for (std::uint64_t seed : {404ULL, 505ULL}) {
      const LatentChain ch =
          slice_sample(lt, Eigen::VectorXd::Zero(2), 10000, seed, {});
      CHECK(sample_cov(ch.samples, 0, 0) == doctest::Approx(1.0).epsilon(0.2));
      CHECK(sample_cov(ch.samples, 1, 1) == doctest::Approx(1.0).epsilon(0.2));
      CHECK(sample_cov(ch.samples, 0, 1) == doctest::Approx(r).epsilon(0.2));
    }
  }

  SUBCASE("constant target explores without rejection") {
    auto lt = [](const Eigen::VectorXd&) { return 0.0; };
    const LatentChain ch =
        slice_sample(lt, Eigen::VectorXd::Zero(1), 500, 7, {});
    CHECK(ch.diagnostics.acceptance == 1.0);
    double lo = 1e300, hi = -1e300;
    for (const auto& z : ch.samples) {
      lo = std::min(lo, z[0]);
      hi = std::max(hi, z[0]);
    }
    CHECK(hi - lo > 10.0);
  }

  SUBCASE("deterministic given seed") {
    auto lt = [](const Eigen::VectorXd& z) { return -0.5 * z.squaredNorm(); };
    SliceOptions opts;
    opts.burn_in = 50;
    opts.thinning = 3;
    const LatentChain a =
        slice_sample(lt, Eigen::VectorXd::Ones(3), 100, 99, opts);
    const LatentChain b =
        slice_sample(lt, Eigen::VectorXd::Ones(3), 100, 99, opts);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i)
      CHECK(a.samples[i] == b.samples[i]);
    CHECK(a.diagnostics.autocorr_time == b.diagnostics.autocorr_time);
  }

  SUBCASE("validation") {
    auto lt = [](const Eigen::VectorXd& z) { return -0.5 * z[0] * z[0]; };
    auto bad = [](const Eigen::VectorXd&) {
      return -std::numeric_limits<double>::infinity();
    };
    CHECK_THROWS_AS(slice_sample(bad, Eigen::VectorXd::Zero(1), 10, 1, {}),
                    ConfigError);
    CHECK_THROWS_AS(slice_sample(lt, Eigen::VectorXd(), 10, 1, {}),
                    ConfigError);
    CHECK_THROWS_AS(slice_sample(lt, Eigen::VectorXd::Zero(1), 0, 1, {}),
                    ConfigError);
    SliceOptions neg;
    neg.width = -1.0;
    CHECK_THROWS_AS(slice_sample(lt, Eigen::VectorXd::Zero(1), 10, 1, neg),
                    ConfigError);
    SliceOptions huge;
    huge.thinning = 1000000000;
    CHECK_THROWS_AS(
        slice_sample(lt, Eigen::VectorXd::Zero(1), 1000, 1, huge),
        ResourceError);
  }
}

TEST_CASE("preconditioned crank-nicolson sampler") {
  SUBCASE("flat likelihood reproduces the prior") {
    auto ll = [](const Eigen::VectorXd&) { return 0.0; };
    PcnOptions opts;
    opts.thinning = 10;
    for (std::uint64_t seed : {606ULL, 707ULL}) {
      const LatentChain ch =
          pcn_sample(ll, Eigen::VectorXd::Zero(3), 0.9, 1000, seed, opts);
      CHECK(ch.diagnostics.acceptance == 1.0);
      CHECK(std::fabs(sample_mean(ch.samples, 0)) < 0.2);
      CHECK(sample_cov(ch.samples, 0, 0) == doctest::Approx(1.0).epsilon(0.2));
      // Two-sample test against direct prior draws at the 1% level.
      std::vector<double> xs, ys(1000);
      for (const auto& z : ch.samples) xs.push_back(z[0]);
      Rng direct(seed + 999);
      for (double& y : ys) y = direct.normal();
      const double d_crit = 1.6276 * std::sqrt(2.0 / 1000.0);
      CHECK(ks_statistic(xs, ys) < d_crit);
    }
  }

  SUBCASE("conjugate gaussian posterior") {
    // Observation y = 1.2 with noise sigma = 0.5 on a standard-normal
    // prior: posterior is N(0.96, 0.2).
    auto ll = [](const Eigen::VectorXd& z) {
      const double r = (1.2 - z[0]) / 0.5;
      return -0.5 * r * r;
    };
    PcnOptions opts;
    opts.burn_in = 1000;
    opts.thinning = 2;
    for (std::uint64_t seed : {808ULL, 909ULL}) {
      const LatentChain ch =
          pcn_sample(ll, Eigen::VectorXd::Zero(1), 0.5, 4000, seed, opts);
      const double post_sigma = std::sqrt(0.2);
      CHECK(std::fabs(sample_mean(ch.samples, 0) - 0.96) < 3.0 * post_sigma);
      CHECK(std::fabs(sample_mean(ch.samples, 0) - 0.96) < 0.05);
      CHECK(sample_cov(ch.samples, 0, 0) == doctest::Approx(0.2).epsilon(0.2));
    }
  }

  SUBCASE("vanishing step size flags poor mixing") {
    auto ll = [](const Eigen::VectorXd& z) {
      const double r = (1.2 - z[0]) / 0.5;
      return -0.5 * r * r;
    };
    const LatentChain ch =
        pcn_sample(ll, Eigen::VectorXd::Zero(1), 0.001, 2000, 42, {});
    CHECK(ch.diagnostics.acceptance > 0.95);
    CHECK(ch.diagnostics.mixing_warning);
  }

  SUBCASE("validation") {
    auto ll = [](const Eigen::VectorXd&) { return 0.0; };
    auto bad = [](const Eigen::VectorXd&) {
      return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(pcn_sample(ll, Eigen::VectorXd::Zero(1), 0.0, 10, 1, {}),
                    ConfigError);
    CHECK_THROWS_AS(pcn_sample(ll, Eigen::VectorXd::Zero(1), 1.5, 10, 1, {}),
                    ConfigError);
    CHECK_THROWS_AS(pcn_sample(bad, Eigen::VectorXd::Zero(1), 0.5, 10, 1, {}),
                    ConfigError);
  }
}

TEST_CASE("latent parametrizations") {
  SUBCASE("state map yields valid density matrices") {
    for (int i = 0; i < 50; ++i) {
      const CMat rho = qst_latent_state(latents_from(600 + i, 8));
      CHECK_NOTHROW(DensityMatrix{rho}.validate());
      CHECK(std::fabs(rho.trace().real() - 1.0) < 1e-12);
    }
    const CMat mixed = qst_latent_state(Eigen::VectorXd::Zero(8));
    CHECK(max_abs_diff(mixed, CMat::Identity(2, 2) * 0.5) < 1e-15);
    CHECK_THROWS_AS(qst_latent_state(Eigen::VectorXd::Zero(7)), ConfigError);
  }

  SUBCASE("channel map is trace preserving by construction") {
    for (int i = 0; i < 50; ++i) {
      const KrausSet ch = qpt_latent_channel(latents_from(700 + i, 32));
      REQUIRE(ch.ops.size() == 4);
      CMat acc = CMat::Zero(2, 2);
      for (const CMat& a : ch.ops) acc += a.adjoint() * a;
      CHECK(max_abs_diff(acc, CMat::Identity(2, 2)) < 1e-12);
      CHECK_NOTHROW(ch.validate());
    }
    // Rank-deficient latents fall back to the identity channel.
    const KrausSet fallback = qpt_latent_channel(Eigen::VectorXd::Zero(32));
    CHECK(max_abs_diff(fallback.ops[0], CMat::Identity(2, 2)) < 1e-15);
    CHECK_THROWS_AS(qpt_latent_channel(Eigen::VectorXd::Zero(8)),
                    ConfigError);
  }

  SUBCASE("corner map stays inside the unit operator ball") {
    for (int i = 0; i < 50; ++i) {
      const CMat c = cnot_latent_corner(latents_from(800 + i, 64));
      Eigen::JacobiSVD<CMat> svd(c);
      CHECK(svd.singularValues()[0] <= 1.0 + 1e-12);
    }
    CHECK_THROWS_AS(cnot_latent_corner(Eigen::VectorXd::Zero(63)),
                    ConfigError);
  }

  SUBCASE("corner map reaches the reference gate block exactly") {
    // Complete the reference block C to an isometry [C; B] with
    // B^dag B = I - C^dag C; the polar map then fixes it, so the latent
    // parametrization contains the exact postselected gate.
    const CMat c0 = corner_of(cnot_reference_multiport().m);
    const CMat gap = CMat::Identity(4, 4) - c0.adjoint() * c0;
    // Hermitian square root: robust even when the gap is rank deficient.
    Eigen::SelfAdjointEigenSolver<CMat> es(gap);
    REQUIRE(es.eigenvalues().minCoeff() > -1e-12);
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    CMat x(8, 4);
    x.topRows(4) = c0;
    x.bottomRows(4) =
        es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
    Eigen::VectorXd z(64);
    for (int r = 0; r < 8; ++r)
      for (int cc = 0; cc < 4; ++cc) {
        z[2 * (4 * r + cc)] = x(r, cc).real();
        z[2 * (4 * r + cc) + 1] = x(r, cc).imag();
      }
    CHECK(max_abs_diff(cnot_latent_corner(z), c0) < 1e-12);
  }
}

TEST_CASE("pair lift and gauge fidelity") {
  const CMat c0 = corner_of(cnot_reference_multiport().m);

  SUBCASE("reference block lifts to one third of the logical gate") {
    const CMat w = cnot_pair_lift(c0);
    const CMat t = target_gate("cnot").t;
    CHECK(max_abs_diff(w, t / 3.0) < 1e-12);
    CHECK(cnot_gauge_fidelity(c0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("bin rephasing cannot change the fidelity") {
    Rng rng(5);
    CMat c = c0;
    for (int i = 0; i < 4; ++i) {
      c.row(i) *= std::polar(1.0, rng.uniform(0.0, 2.0 * M_PI));
      c.col(i) *= std::polar(1.0, rng.uniform(0.0, 2.0 * M_PI));
    }
    CHECK(cnot_gauge_fidelity(c) == doctest::Approx(1.0).epsilon(1e-10));
  }

  SUBCASE("conjugation and scale invariance") {
    const CMat c = cnot_latent_corner(latents_from(11, 64));
    const double f = cnot_gauge_fidelity(c);
    CHECK(cnot_gauge_fidelity(c.conjugate()) ==
          doctest::Approx(f).epsilon(1e-10));
    CHECK(cnot_gauge_fidelity(2.0 * c) == doctest::Approx(f).epsilon(1e-10));
  }

  SUBCASE("ascent dominates plain alignment and random phase search") {
    Rng search_rng(987654321ULL);
    const CMat t = target_gate("cnot").t;
    for (int i = 0; i < 5; ++i) {
      const CMat c = cnot_latent_corner(latents_from(1000 + i, 64));
      const CMat w = cnot_pair_lift(c);
      const double f = cnot_gauge_fidelity(c);
      // Never below the phase-blind overlap of the raw lift.
      CHECK(f >= fidelity_success(w, t).fidelity - 1e-12);
      // Never beaten by randomized phase assignments.
      const CMat m = t.conjugate().cwiseProduct(w);
      double best = 0.0;
      for (int trial = 0; trial < 2000; ++trial) {
        double ph[4][2];
        for (auto& group : ph)
          for (double& p : group) p = search_rng.uniform(0.0, 2.0 * M_PI);
        std::complex<double> tot = 0.0;
        for (int r = 0; r < 2; ++r)
          for (int s = 0; s < 2; ++s)
            for (int k = 0; k < 2; ++k)
              for (int l = 0; l < 2; ++l)
                tot += m(2 * r + s, 2 * k + l) *
                       std::polar(1.0, ph[0][r] + ph[1][s] + ph[2][k] +
                                           ph[3][l]);
        best = std::max(best, std::abs(tot));
      }
      CHECK(f >= best * best / (t.squaredNorm() * w.squaredNorm()) - 1e-9);
    }
  }

  SUBCASE("degenerate corners") {
    CHECK(cnot_gauge_fidelity(CMat::Zero(4, 4)) == 0.0);
    CHECK_THROWS_AS(cnot_pair_lift(CMat::Zero(3, 3)), ConfigError);
  }
}

TEST_CASE("state tomography inference") {
  const CMat plus = pauli_eigenstate(PauliAxis::X, 1);

  SUBCASE("noiseless plus-state data concentrates on the truth") {
    DetectorModel clean;
    const CountRecord rec =
        simulate_qst_counts(plus, qst_settings(0.6), 1e6, clean, 11);
    InferenceOptions opts;
    opts.seed = 21;
    const InferenceReport rep = qst_infer(rec, {}, opts, plus);
    CHECK(rep.has_fidelity);
    CHECK(rep.fidelity_mean >= 0.99);
    CHECK(rep.fidelity_std < 1e-4);
    CHECK(rep.fidelity_q975 <= 1.0 + 1e-12);
    const CMat mean = mat_from_json(rep.mean.at("state"));
    CHECK(state_fidelity(DensityMatrix{mean}, DensityMatrix{plus}) > 0.999);
    CHECK(rep.flags.empty());
    CHECK(rep.metadata.at("sampler") == "pcn");
    CHECK(rep.metadata.at("retained").get<int>() >= 1024);

    // The posterior object itself satisfies the structural invariants.
    const QstPosterior post = qst_posterior(rec, {}, opts);
    for (const CMat& s : post.states) CHECK_NOTHROW(DensityMatrix{s}.validate());
  }

  SUBCASE("multinomial likelihood variant") {
    DetectorModel clean;
    const CountRecord rec =
        simulate_qst_counts(plus, qst_settings(0.6), 1e6, clean, 11);
    InferenceOptions opts;
    opts.seed = 22;
    opts.multinomial = true;
    const InferenceReport rep = qst_infer(rec, {}, opts, plus);
    CHECK(rep.fidelity_mean >= 0.99);
  }

  SUBCASE("zero-count data returns the prior") {
    DetectorModel dead;
    dead.dark_prob = 0.0;
    const CountRecord rec =
        simulate_qst_counts(plus, qst_settings(0.6), 0.0, dead, 3);
    for (const CountEntry& e : rec.entries) CHECK(e.count == 0);
    InferenceOptions opts;
    opts.seed = 33;
    const InferenceReport rep = qst_infer(rec, {}, opts, plus);
    CHECK(rep.diagnostics.acceptance == 1.0);
    CHECK(rep.fidelity_std > 0.15);
    CHECK(rep.fidelity_mean < 0.9);
  }

  SUBCASE("trajectory point with realistic noise") {
    const CMat w = tunable_bs_w(M_PI / 4.0, kThetaStar);
    Eigen::VectorXcd in(2);
    in << 1.0, 0.0;
    const DensityMatrix rho =
        apply_channel(channel_from_mode_matrix(w), DensityMatrix::pure(in));
    const CountRecord rec = simulate_qst_counts(
        rho.rho, qst_settings(0.6), 1e6, desk_detector(), 905);
    InferenceOptions opts;
    opts.seed = 1005;
    const InferenceReport rep = qst_infer(rec, {}, opts, rho.rho);
    CHECK(rep.fidelity_mean >= 0.985);
    CHECK_FALSE(rep.diagnostics.mixing_warning);
  }

  SUBCASE("reports are reproducible") {
    DetectorModel clean;
    const CountRecord rec =
        simulate_qst_counts(plus, qst_settings(0.6), 1e5, clean, 44);
    InferenceOptions opts;
    opts.sweeps = 2000;
    opts.retain = 256;
    opts.seed = 55;
    const InferenceReport a = qst_infer(rec, {}, opts, plus);
    const InferenceReport b = qst_infer(rec, {}, opts, plus);
    CHECK(canonical_dump(a.to_json()) == canonical_dump(b.to_json()));
  }

  SUBCASE("sampler override") {
    DetectorModel clean;
    const CountRecord rec =
        simulate_qst_counts(plus, qst_settings(0.6), 1e5, clean, 44);
    InferenceOptions opts;
    opts.sampler = SamplerKind::kSlice;
    opts.sweeps = 2000;
    opts.retain = 256;
    opts.seed = 56;
    const InferenceReport rep = qst_infer(rec, {}, opts, plus);
    CHECK(rep.metadata.at("sampler") == "slice");
    CHECK(rep.diagnostics.acceptance == 1.0);
    CHECK(rep.fidelity_mean >= 0.99);
  }

  SUBCASE("errors") {
    DetectorModel clean;
    const CountRecord two_axes = simulate_qst_counts(
        plus, {qst_setting(PauliAxis::Z), qst_setting(PauliAxis::X)}, 1e5,
        clean, 1);
    CHECK_THROWS_AS(qst_infer(two_axes), ConfigError);

    const CountRecord rec =
        simulate_qst_counts(plus, qst_settings(0.6), 1e5, clean, 2);
    CountRecord wrong = rec;
    wrong.kind = "qpt";
    CHECK_THROWS_AS(qst_infer(wrong), ConfigError);

    CountRecord stripped = rec;
    stripped.metadata.erase("detector");
    CHECK_THROWS_AS(qst_infer(stripped), ConfigError);

    InferenceOptions tight;
    tight.sweeps = 100;
    tight.retain = 1024;
    CHECK_THROWS_AS(qst_infer(rec, {}, tight), ConfigError);
    InferenceOptions bad;
    bad.burn_in_fraction = 1.5;
    CHECK_THROWS_AS(qst_infer(rec, {}, bad), ConfigError);
  }
}

TEST_CASE("process tomography inference") {
  SUBCASE("identity channel recovery") {
    const KrausSet id = unitary_kraus(CMat::Identity(2, 2));
    const CountRecord rec =
        simulate_qpt_counts(id, 1e6, desk_detector(), 0.6, 5);
    InferenceOptions opts;
    opts.seed = 55;
    const InferenceReport rep = qpt_infer(rec, opts, choi_from_kraus(id));
    CHECK(rep.fidelity_mean >= 0.99);
    CHECK(rep.fidelity_std <= 1e-3);
    const CMat chi = mat_from_json(rep.mean.at("chi"));
    CHECK(chi(0, 0).real() >= 0.999);
    ChoiMatrix mean;
    mean.phi = mat_from_json(rep.mean.at("choi"));
    mean.dim_in = 2;
    mean.dim_out = 2;
    CHECK_NOTHROW(mean.validate());
    CHECK(mean.trace_preserving(1e-6));

    const QptPosterior post = qpt_posterior(rec, opts);
    for (const KrausSet& ch : post.channels) CHECK_NOTHROW(ch.validate());
  }

  SUBCASE("splitter setting at desk-scale statistics") {
    const CMat w = tunable_bs_w(M_PI / 3.0, kThetaStar);
    const KrausSet ch = channel_from_mode_matrix(w);
    const CountRecord rec =
        simulate_qpt_counts(ch, 1e6, desk_detector(), 0.6, 181);
    InferenceOptions opts;
    opts.seed = 281;
    const InferenceReport rep = qpt_infer(rec, opts, choi_from_kraus(ch));
    CHECK(rep.fidelity_mean >= 0.97);
    CHECK(rep.fidelity_std <= 0.01);
  }

  SUBCASE("half-reflective point has the balanced-splitter process matrix") {
    const CMat w = tunable_bs_w(M_PI, kThetaStar);
    const KrausSet ch = channel_from_mode_matrix(w);
    const CountRecord rec =
        simulate_qpt_counts(ch, 1e6, desk_detector(), 0.6, 391);
    InferenceOptions opts;
    opts.seed = 392;
    const InferenceReport rep = qpt_infer(rec, opts, choi_from_kraus(ch));
    CHECK(rep.fidelity_mean >= 0.97);
    const CMat chi = mat_from_json(rep.mean.at("chi"));
    // Balanced splitter = Hadamard-like: energy sits in the X/Z block.
    CHECK(chi(0, 0).real() < 0.05);
    CHECK(chi(1, 1).real() == doctest::Approx(0.5).epsilon(0.1));
    CHECK(chi(3, 3).real() == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(chi(1, 3)) == doctest::Approx(0.5).epsilon(0.1));
  }

  SUBCASE("errors") {
    const KrausSet id = unitary_kraus(CMat::Identity(2, 2));
    const CountRecord rec =
        simulate_qpt_counts(id, 1e5, desk_detector(), 0.6, 6);
    CountRecord missing = rec;
    missing.entries.pop_back();
    CHECK_THROWS_AS(qpt_infer(missing), ConfigError);
    CountRecord wrong = rec;
    wrong.kind = "qst";
    CHECK_THROWS_AS(qpt_infer(wrong), ConfigError);
  }
}

TEST_CASE("gate model inference") {
  SUBCASE("monitored corner carries the whole counting model") {
    // Simulating from the full nine-bin multiport and from its monitored
    // 4x4 block wrapped as a standalone device gives identical counters.
    const ModeMatrix ref = cnot_reference_multiport();
    ModeMatrix wrap;
    wrap.m = corner_of(ref.m);
    wrap.window = Window{0, 3, 0};
    CnotBins compact;
    compact.control0 = 0;
    compact.control1 = 1;
    compact.target0 = 2;
    compact.target1 = 3;
    PairSourceModel src;
    src.mu = 1e-3;
    src.detector_a.efficiency = 0.3;
    src.detector_a.dark_prob = 1e-5;
    src.detector_b.efficiency = 0.25;
    src.detector_b.dark_prob = 2e-5;
    const CountRecord a = simulate_cnot_truth_table(ref, src, 0.5, 321);
    const CountRecord b =
        simulate_cnot_truth_table(wrap, src, 0.5, 321, compact);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(a.entries[i].setting == b.entries[i].setting);
      CHECK(a.entries[i].outcome == b.entries[i].outcome);
      CHECK(a.entries[i].count == b.entries[i].count);
    }
  }

  SUBCASE("perturbed gate recovery with credible interval") {
    const ModeMatrix v0 = perturbed_cnot(0.06, 424242);
    const double f_true = cnot_gauge_fidelity(corner_of(v0.m));
    CHECK(f_true == doctest::Approx(0.94744).epsilon(1e-3));
    PairSourceModel src;
    src.mu = 1.5e-6;
    src.detector_a.efficiency = 0.12;
    src.detector_a.dark_prob = 1.5e-6;
    src.detector_b.efficiency = 0.10;
    src.detector_b.dark_prob = 1.2e-6;
    const CountRecord rec = simulate_cnot_truth_table(v0, src, 600.0, 31337);
    InferenceOptions opts;
    opts.sweeps = 4000;
    opts.seed = 91;
    const InferenceReport rep = cnot_infer(rec, opts);
    CHECK(rep.metadata.at("sampler") == "slice");
    CHECK(rep.diagnostics.acceptance == 1.0);
    CHECK(rep.fidelity_q025 <= f_true);
    CHECK(rep.fidelity_q975 >= f_true);
    CHECK((rep.fidelity_q975 - rep.fidelity_q025) / 2.0 <= 0.02);
    CHECK(std::fabs(rep.fidelity_mean - f_true) < 0.02);
    CHECK(rep.fidelity_std > 1e-4);
    CHECK(rep.fidelity_std < 0.02);
    // Posterior draws satisfy the structural constraint.
    const CnotPosterior post = cnot_posterior(rec, opts);
    REQUIRE(post.draws.size() >= 1024);
    Eigen::JacobiSVD<CMat> svd(post.draws.front().corner);
    CHECK(svd.singularValues()[0] <= 1.0 + 1e-10);
    CHECK(post.draws.front().mu > 0.0);
    CHECK(post.draws.front().mu < 0.1);
  }

  SUBCASE("dead source is flagged as non-identifiable") {
    const ModeMatrix ref = cnot_reference_multiport();
    PairSourceModel src;
    src.mu = 0.0;
    src.detector_a.dark_prob = 1e-5;
    src.detector_b.dark_prob = 1e-5;
    const CountRecord rec = simulate_cnot_truth_table(ref, src, 0.01, 8);
    InferenceOptions opts;
    opts.sweeps = 2000;
    opts.chains = 1;
    opts.retain = 256;
    opts.seed = 14;
    const InferenceReport rep = cnot_infer(rec, opts);
    CHECK(rep.fidelity_std > 0.045);
    CHECK(std::find(rep.flags.begin(), rep.flags.end(), "non-identifiable") !=
          rep.flags.end());
  }

  SUBCASE("errors") {
    const ModeMatrix ref = cnot_reference_multiport();
    PairSourceModel src;
    src.mu = 1e-3;
    const CountRecord rec = simulate_cnot_truth_table(ref, src, 0.01, 9);
    CountRecord missing = rec;
    // Remove one singles counter: moduli become unidentifiable.
    for (std::size_t i = 0; i < missing.entries.size(); ++i)
      if (missing.entries[i].setting == "single_a_0") {
        missing.entries.erase(missing.entries.begin() + i);
        break;
      }
    CHECK_THROWS_AS(cnot_infer(missing), ConfigError);
    CountRecord wrong = rec;
    wrong.kind = "qst";
    CHECK_THROWS_AS(cnot_infer(wrong), ConfigError);
  }
}

TEST_CASE("posterior contraction with integration time") {
  const CMat plus = pauli_eigenstate(PauliAxis::X, 1);
  double sum_short = 0.0, sum_long = 0.0;
  int wins = 0;
  for (int repl = 0; repl < 10; ++repl) {
    double stds[2];
    for (int half = 0; half < 2; ++half) {
      DetectorModel det = desk_detector();
      det.integration_seconds = half == 0 ? 0.01 : 0.02;
      const CountRecord rec = simulate_qst_counts(
          plus, qst_settings(0.6), 1e5, det, 5000 + repl);
      InferenceOptions opts;
      opts.sweeps = 4000;
      opts.retain = 512;
      opts.seed = 6000 + 2 * repl + half;
      stds[half] = qst_infer(rec, {}, opts, plus).fidelity_std;
    }
    sum_short += stds[0];
    sum_long += stds[1];
    wins += stds[1] < stds[0] ? 1 : 0;
  }
  CHECK(sum_long < sum_short);
  CHECK(wins >= 8);
}

TEST_CASE("report serialization and sampler labels") {
  CHECK(sampler_label(SamplerKind::kSlice) == "slice");
  CHECK(sampler_label(SamplerKind::kPcn) == "pcn");
  CHECK(sampler_from_label("slice") == SamplerKind::kSlice);
  CHECK(sampler_from_label("pcn") == SamplerKind::kPcn);
  CHECK_THROWS_AS(sampler_from_label("metropolis"), ConfigError);

  const CMat plus = pauli_eigenstate(PauliAxis::X, 1);
  DetectorModel clean;
  const CountRecord rec =
      simulate_qst_counts(plus, qst_settings(0.6), 1e5, clean, 44);
  InferenceOptions opts;
  opts.sweeps = 2000;
  opts.retain = 256;
  opts.seed = 57;
  const InferenceReport rep = qst_infer(rec, {}, opts, plus);
  const nlohmann::json j = rep.to_json();
  for (const char* key : {"mean", "diagnostics", "flags", "metadata",
                          "fidelity"})
    CHECK(j.contains(key));
  CHECK(j.at("fidelity").at("mean").get<double>() == rep.fidelity_mean);
  CHECK(j.at("diagnostics").at("acceptance").get<double>() ==
        rep.diagnostics.acceptance);
  CHECK(j.at("metadata").at("sweeps").get<int>() == 2000);

  // Without a target there is no fidelity block.
  const InferenceReport bare = qst_infer(rec, {}, opts);
  CHECK_FALSE(bare.has_fidelity);
  CHECK_FALSE(bare.to_json().contains("fidelity"));
}
