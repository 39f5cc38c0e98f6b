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

#ifndef QFP_SYNTHESIS_HPP
#define QFP_SYNTHESIS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfp/circuit.hpp"
#include "qfp/optimize.hpp"
#include "qfp/transfer.hpp"

namespace qfp {

/// Parameterized modulator/shaper/modulator cascade: each modulator drives
/// harmonics 1..harmonics with free amplitude and phase, and the shaper
/// holds one free phase per channel bin.  Parameter vector layout:
/// [amp_1..amp_H, ph_1..ph_H] for the first modulator, the same for the
/// second, then the channel phases low bin to high.
struct CircuitTemplate {
  int harmonics = 1;
  int shaper_lo = 0;
  int shaper_hi = 0;
  int declared_lo = 0;
  int declared_hi = 0;
  double p_target = 0.0;   ///< success-probability hinge floor
  double lambda_f = 1.0;   ///< default fidelity weight
  double lambda_p = 1.0;   ///< default success-hinge weight
  int starts = 32;
  int explore_iters = 120;
  int polish_iters = 400;
  int polish_count = 3;
  /// Allow the optimizer's stall recovery during exploration (finds rare
  /// basins at extra cost); polishing always uses it.
  bool explore_retry = false;

  int channels() const { return shaper_hi - shaper_lo + 1; }
  std::size_t param_count() const {
    return static_cast<std::size_t>(4 * harmonics + channels());
  }
  /// Amplitudes in [0, 2*pi], all phases in [-pi, pi].
  BoxSpec bounds() const;
  /// Guard sized to the current drive strengths plus the shaper extent.
  int guard_for(const std::vector<double>& params) const;
  /// Channel phase at `bin` under the hold extension policy.
  double shaper_phase(const std::vector<double>& params, int bin) const;
  QfpCircuit instantiate(const std::vector<double>& params, int guard) const;
  void validate() const;

  nlohmann::json to_json() const;
  static CircuitTemplate from_json(const nlohmann::json& j);
  /// Canonical templates: "hadamard", "tritter", "dft" (order d), "cnot".
  static CircuitTemplate for_gate(const std::string& label, int order = 0);
};

struct SynthesisOptions {
  double lambda_fidelity = -1.0;  ///< <= 0: use the template default
  double lambda_success = -1.0;   ///< <= 0: use the template default
  double p_target = -1.0;         ///< < 0: use the template default
  long long budget = 0;           ///< total objective evaluations; 0 = default
  std::uint64_t seed = 1;
  int starts = 0;                 ///< 0: template default
};

struct SynthesisResult {
  std::vector<double> params;
  double fidelity = 0.0;     ///< recomputed through the transfer module
  double success = 0.0;      ///< recomputed through the transfer module
  double objective = 0.0;    ///< final penalized objective at the optimum
  int best_start = 0;
  std::uint64_t seed = 0;
  bool budget_exhausted = false;
  std::vector<double> trace;  ///< winning descent's objective history
  struct StartSummary {
    int start = 0;
    double objective = 0.0;
    int iters = 0;
    long long evals = 0;
    bool converged = false;
  };
  std::vector<StartSummary> start_summaries;
  QfpCircuit circuit;        ///< winner instantiated at a validated window

  nlohmann::json to_json() const;
};

/// Multi-start quasi-Newton synthesis of a circuit realizing `target`,
/// minimizing lambda_f*(1 - F) + lambda_p*max(0, p_target - P).  Starts are
/// independent substreams of the seed (start 0 is the all-zero point) and
/// run in parallel; the reported metrics are recomputed from the winning
/// circuit through compose_circuit and fock_transfer, never read back from
/// optimizer state.  Throws ToleranceError when no start reaches F > 0.5.
SynthesisResult synthesize(const CircuitTemplate& tpl, const TargetGate& target,
                           const SynthesisOptions& opts = {});

/// Root-find the modulation index at which the postselected splitter
/// reflectivity |W_01|^2 / (|W_00|^2 + |W_01|^2) at alpha = pi equals
/// `target_r_at_pi` (in (0, 0.5]); bisection on the monotone branch.
double calibrate_tunable_bs(double target_r_at_pi);

struct DftScalingRow {
  int order = 0;
  int harmonics = 0;
  int channels = 0;
  double fidelity = 0.0;
  double success = 0.0;
};

/// Synthesize DFT gates for d = 2..d_max (d_max <= 10) and tabulate the
/// achieved metrics.
std::vector<DftScalingRow> dft_scaling_study(int d_max,
                                             std::uint64_t seed = 1,
                                             long long budget_per_gate = 0);

}  // namespace qfp

#endif  // QFP_SYNTHESIS_HPP
