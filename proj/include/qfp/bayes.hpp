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

#ifndef QFP_BAYES_HPP
#define QFP_BAYES_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfp/channel.hpp"
#include "qfp/counts.hpp"
#include "qfp/linalg.hpp"

namespace qfp {

/// Unnormalized log density (or log likelihood) over a real latent vector.
using LogDensity = std::function<double(const Eigen::VectorXd&)>;

/// Per-chain (or merged) Markov-chain health summary.
struct ChainDiagnostics {
  /// Fraction of accepted proposals over the post-burn-in sweeps.  Slice
  /// sampling never rejects, so it reports exactly 1.
  double acceptance = 1.0;
  /// Integrated autocorrelation time of the log-density series (which is
  /// blind to gauge directions of the latents), estimated on the
  /// post-burn-in, pre-thinning sweeps; falls back to the first latent
  /// coordinate when the log density is constant.
  double autocorr_time = 1.0;
  std::uint64_t seed = 0;
  int burn_in = 0;
  int thinning = 1;
  /// Raised when the chain looks poorly mixed: autocorrelation time above
  /// one twentieth of the retained window, or acceptance below 5%.
  bool mixing_warning = false;

  nlohmann::json to_json() const;
};

/// One sampled latent chain: retained draws plus health diagnostics.
struct LatentChain {
  std::vector<Eigen::VectorXd> samples;
  ChainDiagnostics diagnostics;
};

/// Tuning knobs for the univariate stepping-out slice sampler.
struct SliceOptions {
  /// Initial bracket width for the stepping-out search.
  double width = 1.0;
  /// Maximum number of stepping-out extensions per coordinate update.
  int max_step_out = 64;
  /// Sweeps discarded from the front of the chain.
  int burn_in = 0;
  /// Keep every `thinning`-th sweep after burn-in.
  int thinning = 1;
};

/// Tuning knobs for the preconditioned Crank-Nicolson sampler.
struct PcnOptions {
  /// Sweeps discarded from the front of the chain.
  int burn_in = 0;
  /// Keep every `thinning`-th sweep after burn-in.
  int thinning = 1;
  /// When true, the step size is tuned toward `target_acceptance` in small
  /// batches during burn-in and then frozen for the retained sweeps.
  bool adapt = false;
  double target_acceptance = 0.25;
};

/// Draw `n` retained samples from exp(log_target) by coordinate-wise slice
/// sampling with stepping-out and shrinkage.  Each sweep updates every
/// coordinate once; the chain runs burn_in + n * thinning sweeps total and
/// is deterministic given `seed`.  The target must be finite at `z0`.
LatentChain slice_sample(const LogDensity& log_target,
                         const Eigen::VectorXd& z0, int n, std::uint64_t seed,
                         const SliceOptions& opts = {});

/// Draw `n` retained samples from the posterior
///     pi(z) proportional to exp(log_likelihood(z)) * N(z; 0, I)
/// with the preconditioned Crank-Nicolson proposal
///     z' = sqrt(1 - beta^2) z + beta xi,   xi ~ N(0, I),
/// accepted with probability min(1, exp(logL(z') - logL(z))).  The standard
/// normal prior is built into the proposal; beta must lie in (0, 1].  The
/// chain runs burn_in + n * thinning sweeps and is deterministic given
/// `seed`.  The likelihood must be finite at `z0`.
LatentChain pcn_sample(const LogDensity& log_likelihood,
                       const Eigen::VectorXd& z0, double beta, int n,
                       std::uint64_t seed, const PcnOptions& opts = {});

enum class SamplerKind { kSlice, kPcn };

std::string sampler_label(SamplerKind kind);
SamplerKind sampler_from_label(const std::string& label);

/// Options shared by the three inference drivers.  Defaults: 2 chains of
/// 20000 sweeps, 25% burn-in, thinned to at least 1024 retained samples in
/// total, step size adapted toward 25% acceptance during burn-in (pCN).
struct InferenceOptions {
  /// Sampler override; when unset each model uses its native default
  /// (slice sampling for the pair-source gate model, pCN for state and
  /// process tomography).
  std::optional<SamplerKind> sampler;
  int sweeps = 20000;
  double burn_in_fraction = 0.25;
  /// Minimum total number of retained posterior samples across chains.
  int retain = 1024;
  int chains = 2;
  std::uint64_t seed = 1;
  /// Initial pCN step size (adapted during burn-in, then frozen).
  double pcn_beta = 0.25;
  /// Initial slice bracket width.
  double slice_width = 1.0;
  /// State tomography only: replace the independent-Poisson likelihood with
  /// a per-setting binomial conditioned on the observed totals.
  bool multinomial = false;

  void validate() const;
};

/// Map 8 standard-normal latents to a single-qubit density matrix via a
/// complex 2x2 matrix G: rho = G G^dag / tr(G G^dag).  Positive
/// semidefiniteness and unit trace hold by construction; the induced prior
/// is the Hilbert-Schmidt measure.
CMat qst_latent_state(const Eigen::VectorXd& z);

/// Map 32 standard-normal latents to a CPTP qubit channel: the latents fill
/// a complex 8x2 matrix X, the polar factor V = X (X^dag X)^{-1/2} is an
/// isometry, and its four stacked 2x2 blocks are the Kraus operators.
/// sum_k A_k^dag A_k = I holds to rounding by construction.
KrausSet qpt_latent_channel(const Eigen::VectorXd& z);

/// Map 64 standard-normal latents to the 4x4 monitored-bin block of a
/// lossy multiport: the latents fill a complex 8x4 matrix whose polar
/// factor is an isometry, and the top 4x4 corner (rows and columns ordered
/// control-0, control-1, target-0, target-1) is returned.  The corner
/// ranges over every matrix of operator norm at most 1, so unitary blocks
/// and postselected-gate blocks are both reachable.
CMat cnot_latent_corner(const Eigen::VectorXd& z);

/// Two-photon transfer block of a monitored-bin corner: entry
/// ((r,s),(k,l)) is the permanent V(r,k) V(2+s,2+l) + V(2+s,k) V(r,2+l),
/// i.e. the amplitude for a control photon in logical k and a target photon
/// in logical l to land in logical (r,s).  Rows and columns are indexed
/// 2r+s and 2k+l.
CMat cnot_pair_lift(const CMat& corner);

/// Gauge-optimal postselected fidelity of a monitored-bin corner against
/// the canonical controlled-NOT.  Counting statistics are blind to a phase
/// on each monitored row and column, so the fidelity is maximized over the
/// eight bin phases (by coordinate ascent on the four phase groups from
/// several starts).  Scale-invariant in the corner.
double cnot_gauge_fidelity(const CMat& corner);

/// Posterior over single-qubit states from a tomography count record.
struct QstPosterior {
  std::vector<CMat> states;
  ChainDiagnostics diagnostics;
};

/// Posterior over CPTP qubit channels from a process-tomography record.
struct QptPosterior {
  std::vector<KrausSet> channels;
  ChainDiagnostics diagnostics;
};

/// One posterior draw of the pair-source gate model: monitored-bin block
/// plus the per-frame pair probability and the two detector efficiencies.
struct CnotDraw {
  CMat corner;
  double mu = 0.0;
  double eta_a = 0.0;
  double eta_b = 0.0;
};

/// Posterior over the pair-source gate model from a truth-table record.
struct CnotPosterior {
  std::vector<CnotDraw> draws;
  ChainDiagnostics diagnostics;
};

/// Bayesian-mean summary with a fidelity estimate against a target.
/// The spread is computed from the retained sample set, never from an
/// asymptotic formula; q025/q975 bound the central 95% credible interval.
struct InferenceReport {
  nlohmann::json mean;
  bool has_fidelity = false;
  double fidelity_mean = 0.0;
  double fidelity_std = 0.0;
  double fidelity_q025 = 0.0;
  double fidelity_q975 = 0.0;
  ChainDiagnostics diagnostics;
  std::vector<std::string> flags;
  /// Sampler, sweep, burn-in, thinning, chain-count, and seed settings used.
  nlohmann::json metadata;

  nlohmann::json to_json() const;
};

/// Sample the state posterior for a tomography record produced by (or
/// shaped like) simulate_qst_counts.  `settings` overrides the settings
/// stored in the record metadata when non-empty; at least three distinct
/// measurement axes are required.
QstPosterior qst_posterior(const CountRecord& record,
                           const std::vector<MeasurementSetting>& settings = {},
                           const InferenceOptions& opts = {});

/// Full state-tomography report: Bayesian mean state and, when a target
/// state is supplied, the posterior fidelity distribution against it.
InferenceReport qst_infer(const CountRecord& record,
                          const std::vector<MeasurementSetting>& settings = {},
                          const InferenceOptions& opts = {},
                          const std::optional<CMat>& target_rho = std::nullopt);

/// Sample the channel posterior for a process-tomography record produced
/// by (or shaped like) simulate_qpt_counts.  All 36 input/projection
/// counters must be present.
QptPosterior qpt_posterior(const CountRecord& record,
                           const InferenceOptions& opts = {});

/// Full process-tomography report: Bayesian mean Choi and process matrices
/// and, when a target channel is supplied, the posterior process-fidelity
/// distribution against it.
InferenceReport qpt_infer(
    const CountRecord& record, const InferenceOptions& opts = {},
    const std::optional<ChoiMatrix>& target = std::nullopt);

/// Sample the gate-model posterior for a truth-table record produced by
/// (or shaped like) simulate_cnot_truth_table.  Coincidences identify the
/// interference phases and singles identify the moduli, so all 32 counters
/// per input must be present.  Dark-click probabilities are read from the
/// record metadata as fixed calibration inputs.
CnotPosterior cnot_posterior(const CountRecord& record,
                             const InferenceOptions& opts = {});

/// Full gate-model report: posterior means of the monitored-bin block and
/// nuisance parameters, plus the gauge-optimal controlled-NOT fidelity
/// distribution.  Flags non-identifiability when the fidelity posterior is
/// as wide as the prior (e.g. a dead source).
InferenceReport cnot_infer(const CountRecord& record,
                           const InferenceOptions& opts = {});

}  // namespace qfp

#endif  // QFP_BAYES_HPP
