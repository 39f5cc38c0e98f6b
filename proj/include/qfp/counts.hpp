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

#ifndef QFP_COUNTS_HPP
#define QFP_COUNTS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qfp/channel.hpp"
#include "qfp/circuit.hpp"
#include "qfp/linalg.hpp"

namespace qfp {

/// Threshold detector behind one demultiplexed pathway.  Time is divided
/// into frames of `frame_seconds` (the biphoton correlation window); counts
/// accumulate over `integration_seconds`.  The linearized counting model
/// treats every per-frame click probability to first order, which is valid
/// only deep in the dilute regime — see `linear_regime()` and the guards on
/// the simulators.
struct DetectorModel {
  double efficiency = 1.0;         ///< pathway efficiency, in [0, 1]
  double dark_prob = 0.0;          ///< dark-click probability per frame
  double frame_seconds = 1.5e-9;   ///< coincidence frame duration
  double integration_seconds = 1.0;

  void validate() const;
  double frames() const { return integration_seconds / frame_seconds; }
  double dark_rate_hz() const { return dark_prob / frame_seconds; }
  /// True when efficiency and dark probability are small enough (<= 0.1)
  /// for the first-order count model to be quantitatively trustworthy.
  bool linear_regime() const;

  nlohmann::json to_json() const;
  static DetectorModel from_json(const nlohmann::json& j);
};

/// Photon-pair source feeding two detector pathways (A monitors the control
/// rail, B the target rail).  `mu` is the pair-generation probability per
/// frame; the model keeps only single-pair terms plus the standard
/// accidental-coincidence correction, so mu is capped at 0.1.
struct PairSourceModel {
  double mu = 0.01;
  DetectorModel detector_a;
  DetectorModel detector_b;

  void validate() const;  ///< also requires both detectors to share a frame
  bool linear_regime() const;

  nlohmann::json to_json() const;
  static PairSourceModel from_json(const nlohmann::json& j);
};

enum class PauliAxis { X, Y, Z };

std::string axis_label(PauliAxis axis);
PauliAxis axis_from_label(const std::string& label);

/// One single-qubit measurement configuration: rotate into the computational
/// basis with a gate chain (identity for Z, H for X, H then S-dagger for Y),
/// then demultiplex and count both outcomes.  Rotations realized with a
/// probabilistic gate carry a `success` factor in (0, 1] that scales every
/// outcome rate uniformly; photons scattered outside the qubit space are
/// assumed blocked before the detectors.
struct MeasurementSetting {
  PauliAxis axis = PauliAxis::Z;
  double success = 1.0;

  void validate() const;
  /// Human-readable gate chain implementing the basis change.
  std::string gate_chain() const;
  /// Unitary G with outcome probabilities diag(G rho G^dagger).
  CMat demux_rotation() const;
};

/// Standard tomography setting for one axis: Z measures directly
/// (success 1); X and Y need the probabilistic Hadamard, so they inherit
/// `hadamard_success` (default 0.6).
MeasurementSetting qst_setting(PauliAxis axis, double hadamard_success = 0.6);

/// The three-axis tomography set {Z, X, Y} built from qst_setting.
std::vector<MeasurementSetting> qst_settings(double hadamard_success = 0.6);

/// One labeled counter: `setting` names the measurement configuration,
/// `outcome` the counter within it.
struct CountEntry {
  std::string setting;
  std::string outcome;
  long long count = 0;
};

/// A complete counting dataset: labeled non-negative integers plus the full
/// model metadata (flux, integration, seed, detector/source parameters)
/// needed to reproduce or fit it.  `kind` is "qst" or "cnot_truth_table".
struct CountRecord {
  std::string kind;
  std::vector<CountEntry> entries;
  nlohmann::json metadata;

  void validate() const;
  /// Count for a (setting, outcome) pair; ConfigError when absent.
  long long count_of(const std::string& setting,
                     const std::string& outcome) const;

  nlohmann::json to_json() const;
  static CountRecord from_json(const nlohmann::json& j);

  /// CSV of the 16 coincidence counters of a "cnot_truth_table" record
  /// (columns input,output,count); ConfigError for other kinds.
  std::string truth_table_csv() const;
};

/// Probabilities of the two projective outcomes of a Pauli measurement on a
/// qubit state: p0 onto the +1 eigenvector, p1 onto the -1 eigenvector.
/// Validates rho as a density matrix; p0 + p1 = 1.
std::pair<double, double> projection_probs(const CMat& rho,
                                           const MeasurementSetting& setting);

/// Poisson counting run over the given settings: for each outcome the count
/// is drawn from Poisson(flux * integration * success * efficiency * p
/// + dark_rate * integration).  Deterministic for a given seed regardless
/// of scheduling (one derived RNG substream per setting).  Throws
/// ToleranceError when the expected clicks per frame exceed 0.1 (first-order
/// model breakdown).
CountRecord simulate_qst_counts(const CMat& rho,
                                const std::vector<MeasurementSetting>& settings,
                                double flux_hz, const DetectorModel& detector,
                                std::uint64_t seed);

/// Density matrix of a Pauli eigenstate; sign +1 selects the +1 eigenvector.
CMat pauli_eigenstate(PauliAxis axis, int sign);

/// The six Pauli eigenstate labels in canonical order:
/// Z+, Z-, X+, X-, Y+, Y-.
std::vector<std::string> qpt_input_labels();
CMat qpt_input_state(const std::string& label);

/// Process-tomography dataset: each of the six Pauli eigenstates is sent
/// through the channel and measured on all three axes, giving 36 labeled
/// counters (setting "<input>/<axis>", outcomes "0"/"1").  Count model and
/// determinism match simulate_qst_counts; X and Y analyses inherit
/// `hadamard_success`.
CountRecord simulate_qpt_counts(const KrausSet& channel, double flux_hz,
                                const DetectorModel& detector,
                                double hadamard_success, std::uint64_t seed);

/// Bin layout of a two-qubit controlled gate: detector A monitors the
/// control bins, detector B the target bins.  Defaults match
/// target_gate("cnot").
struct CnotBins {
  int control0 = 0;
  int control1 = 6;
  int target0 = 7;
  int target1 = 8;

  void validate(const Window& window) const;  ///< distinct and in-window
  int control_bin(int k) const { return k == 0 ? control0 : control1; }
  int target_bin(int l) const { return l == 0 ? target0 : target1; }
};

/// Per-frame click probabilities for one input and one monitored output.
struct ClickProbs {
  double p_a = 0.0;   ///< detector A singles
  double p_b = 0.0;   ///< detector B singles
  double p_ab = 0.0;  ///< coincidences, including the 2 p_a p_b accidentals
};

/// First-order click model for a photon pair sent through the multiport:
/// the control photon enters bin control_bin(input_control), the target
/// photon bin target_bin(input_target).  Singles follow each photon's own
/// column moduli, q_a = |V(C_r, c_k)|^2 (phase-blind); coincidences use the
/// phase-sensitive two-photon amplitude
/// q_ab = |V(C_r,c_k) V(T_s,t_l) + V(T_s,c_k) V(C_r,t_l)|^2.  Then
/// p_a = mu eta_a q_a + d_a, p_b likewise, and
/// p_ab = mu eta_a eta_b q_ab + 2 p_a p_b.  Throws ToleranceError when any
/// per-frame probability leaves the linear regime (> 0.1).
ClickProbs cnot_click_probs(const ModeMatrix& v, int input_control,
                            int input_target, int monitored_control,
                            int monitored_target, const PairSourceModel& source,
                            const CnotBins& bins = {});

/// Full truth-table dataset: for each of the four logical inputs, Poisson
/// draws of the 4 coincidence counters and the 2+2 singles counters over
/// integration/frame frames.  Setting labels "input_kl"; outcome labels
/// "coinc_rs", "single_a_r", "single_b_s".  Deterministic per seed (one
/// substream per input).
CountRecord simulate_cnot_truth_table(const ModeMatrix& v,
                                      const PairSourceModel& source,
                                      double integration_seconds,
                                      std::uint64_t seed,
                                      const CnotBins& bins = {});

}  // namespace qfp

#endif  // QFP_COUNTS_HPP
