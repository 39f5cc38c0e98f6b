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

#ifndef QFP_CIRCUIT_HPP
#define QFP_CIRCUIT_HPP

#include <string>
#include <vector>

#include "json.hpp"
#include "qfp/linalg.hpp"

namespace qfp {

/// Periodic temporal phase drive of an electro-optic phase modulator.
/// Either a harmonic table defining phi(t) = sum_h amp_h sin(h w t + ph_h),
/// or uniform samples of phi(t) over one modulation period.  An empty drive
/// is the identity (no modulation).
struct EomDrive {
  struct Harmonic {
    int order = 1;        ///< positive integer multiple of the base tone
    double amplitude = 0; ///< modulation index, radians
    double phase = 0;     ///< temporal offset, radians
  };
  std::vector<Harmonic> harmonics;
  std::vector<double> samples;  ///< phi(t_j) at t_j = j T / P, used if non-empty

  bool sampled() const { return !samples.empty(); }
  /// Sum of order * |amplitude| over the harmonic table; proxy for the
  /// sideband extent of the drive.  Zero for sampled drives (callers fall
  /// back to sample count).
  double weighted_amplitude() const;
  void validate() const;  ///< throws ConfigError on bad harmonic tables
};

/// Fourier coefficients c_k of e^{i phi(t)} = sum_k c_k e^{-i k w t},
/// stored for k in [-order, order] at c[k + order].
struct EomCoefficients {
  int order = 0;
  std::vector<cplx> c;

  cplx at(int k) const;  ///< c_k, zero outside the stored band
  double mass() const;   ///< sum of |c_k|^2 over the stored band
};

/// Compute the sideband coefficients of a drive up to order K.  Harmonic
/// tables use Bessel expansions convolved across harmonics; sampled drives
/// use the discrete Fourier transform of e^{i phi(t_j)} (which requires
/// 2K+1 <= sample count).  Throws ToleranceError if the spectral mass
/// outside [-K, K] exceeds `tail_tol`.
EomCoefficients eom_coefficients(const EomDrive& drive, int K,
                                 double tail_tol = 1e-10);

/// Smallest K whose tail passes `tail_tol`, grown geometrically.
EomCoefficients eom_coefficients_auto(const EomDrive& drive,
                                      double tail_tol = 1e-10);

/// Per-bin phase/transmission filter of a pulse shaper.  Values are listed
/// for the contiguous bins [lo, lo + phases.size()); bins outside that
/// range follow the extension policy.  Transmissions default to 1
/// (phase-only shaping); values below 1 model blocking filters in
/// measurement chains.
struct ShaperMask {
  enum class Extend {
    Hold,      ///< clamp to the nearest listed bin (default)
    Identity,  ///< phase 0, transmission 1 outside the listed range
    Strict     ///< error when evaluated outside the listed range
  };

  int lo = 0;
  std::vector<double> phases;
  std::vector<double> transmissions;  ///< empty means all-ones
  Extend extend = Extend::Hold;

  double phase_at(int bin) const;
  double transmission_at(int bin) const;
  void validate() const;

  /// Step filter: phase 0 for bins <= 0, `alpha` for bins >= 1.
  static ShaperMask step(double alpha);
};

/// One element of a modulator/shaper cascade.
struct CircuitElement {
  enum class Kind { Eom, Shaper };
  Kind kind = Kind::Eom;
  EomDrive eom;     ///< used when kind == Eom
  ShaperMask mask;  ///< used when kind == Shaper

  static CircuitElement make_eom(EomDrive d);
  static CircuitElement make_shaper(ShaperMask m);
};

/// Frequency-bin window: declared (computational) bins [lo, hi] plus
/// `guard` buffer bins on each side.  Matrix row/column i corresponds to
/// absolute bin full_lo() + i.
struct Window {
  int lo = 0;
  int hi = 0;
  int guard = 0;

  int full_lo() const { return lo - guard; }
  int full_hi() const { return hi + guard; }
  int size() const { return hi - lo + 1 + 2 * guard; }
  int declared_count() const { return hi - lo + 1; }
  bool declared(int bin) const { return bin >= lo && bin <= hi; }
  /// Absolute bin -> matrix index; throws ConfigError outside the window.
  int index_of(int bin) const;
  int bin_of(int index) const { return full_lo() + index; }
  void validate() const;
};

/// An ordered modulator/shaper cascade over a bin window.
struct QfpCircuit {
  std::vector<CircuitElement> elements;
  Window window;

  /// Guard-bin count from the drive strengths: ceil(2 * sum over EOM
  /// elements of weighted_amplitude()) + 4.
  int default_guard() const;

  nlohmann::json to_json() const;
  static QfpCircuit from_json(const nlohmann::json& j);
};

/// Dense transfer matrix over a window, rows = output bins, cols = input
/// bins, with truncation diagnostics from composition.
struct ModeMatrix {
  CMat m;
  Window window;
  double truncation_defect = 0.0;

  /// Probability |amplitude|^2 observed in an outermost window bin after
  /// one modulator stage, maximized over declared unit inputs.
  struct StageEdge {
    std::size_t element_index = 0;
    double edge_probability = 0.0;
  };
  std::vector<StageEdge> stage_edges;

  cplx at(int out_bin, int in_bin) const;
  /// Sub-matrix on the declared bins only.
  CMat declared_block() const;

  nlohmann::json to_json() const;
  static ModeMatrix from_json(const nlohmann::json& j);
};

/// Diagonal matrix of a shaper over a window.
ModeMatrix apply_shaper(const ShaperMask& mask, const Window& window);

/// Banded Toeplitz convolution matrix of a modulator over a window:
/// entry (m, n) = c_{m-n}.
ModeMatrix apply_eom(const EomDrive& drive, const Window& window);

struct ComposeOptions {
  double eps_trunc = 1e-6;  ///< per-stage edge / column-deficit budget
  bool auto_grow = true;    ///< widen guard until the edge check passes
  int max_window = 4096;    ///< ResourceError beyond this size
  bool enforce = true;      ///< throw ToleranceError on budget violation
};

/// Product of the element matrices in order (first element acts first),
/// with per-stage edge diagnostics and the final column-deficit defect.
/// With auto_grow, the guard band is widened until every modulator stage
/// keeps the outermost-bin probability below eps_trunc for all declared
/// unit inputs.
ModeMatrix compose_circuit(const QfpCircuit& circuit,
                           const ComposeOptions& opts = {});

/// Pass/fail of the per-stage edge diagnostic carried by a composed matrix.
bool truncation_check(const ModeMatrix& v, double eps);

/// Max |(V^dag V - I)_{jk}| over the declared input bins.
double unitarity_defect(const ModeMatrix& v);

/// The two-element-drive beam-splitter cascade: sine modulator (theta, 0),
/// step-alpha shaper, sine modulator (theta, pi), on declared bins {0, 1}.
QfpCircuit tunable_bs_circuit(double theta, double alpha);

/// Closed-form 2x2 transfer block of tunable_bs_circuit on bins {0, 1} in
/// the infinite-window limit; used as an analytic cross-check.
CMat tunable_bs_analytic(double theta, double alpha, int sum_terms = 60);

}  // namespace qfp

#endif  // QFP_CIRCUIT_HPP
