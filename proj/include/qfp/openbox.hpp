// Copyright 2026 The qfpsim Authors
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

#ifndef QFP_OPENBOX_HPP
#define QFP_OPENBOX_HPP

/// Coherent-probe characterization of a multiport: simulate single-bin and
/// two-bin interferometric probe data for a mode matrix, then reconstruct
/// the matrix (moduli, phases, error bars) from such data.
///
/// Measurement model.  A single-bin probe in bin m' produces the power
/// spectrum P_m = |V_{m m'}|^2 over output bins m.  A fringe scan prepares
/// an equal superposition of two bins (m1', m2') with a swept relative
/// phase phi and records P_m(phi) = |V_{m m1'} + e^{i phi} V_{m m2'}|^2 / 2
/// per output bin.  Optional noise perturbs every recorded power with a
/// multiplicative relative Gaussian of scale `sigma_rel` plus a constant
/// additive background `floor` (powers are clamped at zero).
///
/// Reconstruction.  Moduli come from square roots of the background-
/// corrected spectra.  Each fringe trace is fit by linear least squares to
/// a + b cos(phi) + c sin(phi); the relative phase of the two probed
/// columns within that output row is atan2(-c, b).  Phases are assembled
/// along a spanning tree of the column graph (columns are connected when
/// some scan pairs them with usable signal in at least one shared output
/// row) and the result is presented in a fixed gauge: first probed row and
/// first probed column real and non-negative.  Intensity-only detection
/// cannot resolve a phase for entries whose modulus is consistent with
/// zero; such entries carry an `phase_undefined` flag.

#include <cstdint>
#include <string>
#include <vector>

#include "qfp/circuit.hpp"
#include "qfp/linalg.hpp"
#include "qfp/rng.hpp"

#include "json.hpp"

namespace qfp {

/// Detector/source noise model for simulated probe data.
///
/// A recorded power p becomes max(0, p * (1 + sigma_rel * xi)) + floor with
/// xi a standard normal draw, independent per recorded value.  `floor` is a
/// deterministic additive background (stray light / detector offset), not a
/// random term.
struct ProbeNoise {
  double sigma_rel = 0.0;
  double floor = 0.0;

  /// Human-readable tag recorded in measurement structs, e.g.
  /// "noiseless" or "rel=0.01,floor=1e-06".
  std::string tag() const;

  void validate() const;  // throws ConfigError on negative scales
};

/// Power spectrum from a single-bin coherent probe: one column of |V|^2.
///
/// `power[i]` is the recorded power in output bin `window.bin_of(i)` for a
/// unit-power input in `probe_bin`; values are linear power normalized to
/// the input and are non-negative.
struct SpectrumMeasurement {
  int probe_bin = 0;
  Window window;
  std::vector<double> power;
  std::string noise_tag;

  void validate() const;

  /// CSV with a metadata comment line, a `bin,power` header, and one row
  /// per output bin.
  std::string to_csv() const;
  static SpectrumMeasurement from_csv(const std::string& text);
};

/// Interferometric fringe scan of one probe-bin pair.
///
/// `trace[i][j]` is the power in output bin `window.bin_of(i)` at swept
/// phase `phase[j]`.  The phase grid must hold at least 8 strictly
/// increasing points in [0, 2*pi).
struct FringeScan {
  int probe_lo = 0;   ///< first probed bin (phase reference arm)
  int probe_hi = 0;   ///< second probed bin (swept arm)
  Window window;
  std::vector<double> phase;
  std::vector<std::vector<double>> trace;
  std::string noise_tag;

  void validate() const;

  /// CSV with a metadata comment line, a `phi,p_<bin>,...` header, and one
  /// row per phase grid point.
  std::string to_csv() const;
  static FringeScan from_csv(const std::string& text);
};

/// Result of a sinusoidal least-squares fit to one fringe trace:
/// y(phi) ~ offset + amp_cos * cos(phi) + amp_sin * sin(phi).
struct FringeFit {
  double offset = 0.0;
  double amp_cos = 0.0;
  double amp_sin = 0.0;
  double residual_rms = 0.0;
};

/// Multiport reconstruction over the probed bins.
///
/// `v(r, c)` estimates the mode-matrix entry from input bin `bins[c]` to
/// output bin `bins[r]`, in the gauge named by `gauge` (first probed row
/// and first probed column real and non-negative).  `modulus_stderr(r, c)`
/// is the propagated one-sigma error of |v(r, c)|; `phase_undefined[r][c]`
/// marks entries whose modulus is within `modulus_threshold_sigma` standard
/// errors of zero (their stored phase is conventional, not measured).
struct ReconstructedMultiport {
  std::vector<int> bins;
  CMat v;
  Eigen::MatrixXd modulus_stderr;
  std::vector<std::vector<bool>> phase_undefined;
  std::string gauge;

  nlohmann::json to_json() const;
  static ReconstructedMultiport from_json(const nlohmann::json& j);
};

/// Options for reconstruct_multiport.
struct ReconstructOptions {
  /// Noise scales assumed for error propagation and background
  /// subtraction; should match the instrument (the simulation's
  /// ProbeNoise) when known.
  double assumed_sigma_rel = 0.0;
  double assumed_floor = 0.0;

  /// An entry is flagged phase-undefined when its modulus is at most this
  /// many propagated standard errors above zero.
  double modulus_threshold_sigma = 3.0;

  /// Upper bound on the RMS residual of each fringe fit, as a fraction of
  /// the trace's mean power (plus a small absolute term for near-dark
  /// traces).  Negative selects an automatic bound from the assumed noise
  /// scales.  Exceeding it raises ToleranceError (the trace is not a
  /// sinusoid in phi, so the measurement model does not apply).
  double fit_residual_bound = -1.0;
};

/// Simulates a single-bin probe of `v` in `probe_bin` (which must lie in
/// the full window).  Draws noise from `rng` per the model in ProbeNoise.
SpectrumMeasurement simulate_single_bin_probe(const ModeMatrix& v, int probe_bin,
                                              const ProbeNoise& noise, Rng& rng);

/// Simulates a fringe scan of the (probe_lo, probe_hi) pair over `phase_grid`
/// (at least 8 strictly increasing points in [0, 2*pi)).
FringeScan simulate_fringe_scan(const ModeMatrix& v, int probe_lo, int probe_hi,
                                const std::vector<double>& phase_grid,
                                const ProbeNoise& noise, Rng& rng);

/// Convenience: a uniform n-point phase grid over [0, 2*pi).
std::vector<double> uniform_phase_grid(int n);

/// Least-squares fit of one trace to offset + amp_cos cos + amp_sin sin.
/// `phase` and `trace` must have equal size >= 8.
FringeFit fit_fringe(const std::vector<double>& phase, const std::vector<double>& trace);

/// Fringe visibility (P_max - P_min) / (P_max + P_min) of the fitted
/// sinusoid at `out_bin`: sqrt(b^2 + c^2) / a.  Throws ToleranceError when
/// the fitted mean power is too small to normalize (degenerate fringe).
double fringe_visibility(const FringeScan& scan, int out_bin);

/// Reconstructs the multiport over the probed bins from one spectrum per
/// column and a spanning set of fringe scans.  Spectra must share a window,
/// carry distinct probe bins, and cover every bin probed by the scans.
/// Throws ConfigError when the phase graph is disconnected and
/// ToleranceError when a fringe fit's residual exceeds its bound.
ReconstructedMultiport reconstruct_multiport(const std::vector<SpectrumMeasurement>& spectra,
                                             const std::vector<FringeScan>& scans,
                                             const ReconstructOptions& opts = {});

/// Re-applies the presentation gauge (first probed row and first probed
/// column real and non-negative) in place.  Idempotent: reconstruction
/// output is already in this gauge, so a second application is a no-op and
/// leaves every modulus and any fidelity computed from `r.v` unchanged.
void gauge_fix(ReconstructedMultiport& r);

}  // namespace qfp

#endif  // QFP_OPENBOX_HPP
