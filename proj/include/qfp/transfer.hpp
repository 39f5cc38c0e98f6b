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

#ifndef QFP_TRANSFER_HPP
#define QFP_TRANSFER_HPP

#include <string>
#include <vector>

#include "json.hpp"
#include "qfp/circuit.hpp"
#include "qfp/fock.hpp"
#include "qfp/linalg.hpp"

namespace qfp {

/// N-photon transfer matrix between two Fock bases; rows index output
/// states, columns input states.
struct FockTransfer {
  CMat w;
  FockBasis out_basis;
  FockBasis in_basis;

  nlohmann::json to_json() const;
  static FockTransfer from_json(const nlohmann::json& j);
};

/// A reference operation to compare lifted transfers against: the logical
/// matrix plus the photonic encoding of each logical basis state, given as
/// the multiset of occupied bins (one entry per photon, ascending).
struct TargetGate {
  std::string label;
  CMat t;
  int photons = 1;
  std::vector<std::vector<int>> logical_assignments;

  std::size_t dim() const { return static_cast<std::size_t>(t.rows()); }
  /// Encoded Fock states on a window's mode indexing (bin -> window index).
  std::vector<FockState> fock_states(const Window& w) const;
};

/// Built-in gate library.  Labels: "hadamard", "tritter", "dft" (order d),
/// "identity" (order d), "cnot", "tunable_bs" (params alpha, theta).
/// `order` is ignored by labels that fix their own dimension.
TargetGate target_gate(const std::string& label, int order = 0,
                       double alpha = 0.0, double theta = 0.0);

/// Closed-form 2x2 lifted transfer of the modulator/step-shaper/modulator
/// beam-splitter cascade, with its cross-coupling series truncated at term
/// magnitude 1e-15.
CMat tunable_bs_w(double alpha, double theta);

/// Exact postselected controlled-NOT multiport on the canonical bin layout
/// of target_gate("cnot"): a 9x9 unitary over window bins 0..8 whose
/// two-photon lift on the logical assignments equals CNOT/3 (success 1/9).
/// The control-0 column couples only to out-of-space bins, so a photon
/// entering bin 0 never reaches the other logical bins; the conditional
/// flip is carried by photon-exchange amplitudes inside bins {6,7,8}.
/// Useful as a ground truth for counting simulations and benchmarks.
ModeMatrix cnot_reference_multiport();

enum class PermanentBackend {
  Auto,    ///< direct summation for N <= 3, inclusion-exclusion above
  Direct,  ///< sum over all N! permutations (repeated terms included)
  Ryser    ///< inclusion-exclusion over column subsets
};

struct TransferOptions {
  PermanentBackend backend = PermanentBackend::Auto;
  /// Cap on (permanent cost) x D x D' elementary products.
  double budget = 5e8;
};

/// Lift a mode matrix to the N-photon transfer between the given bases:
/// W_{nn'} = (prod_p n_p! n'_p!)^{-1/2} sum_{sigma} prod_p V[m_p][m'_sigma(p)].
/// Entries are computed in parallel.  Bases address the matrix rows/columns
/// directly (mode index = window index).
FockTransfer fock_transfer(const ModeMatrix& v, const FockBasis& in_basis,
                           const FockBasis& out_basis,
                           const TransferOptions& opts = {});

/// Single-threaded reference implementation with identical semantics,
/// kept for testing and benchmarking the parallel kernel.
FockTransfer fock_transfer_serial(const ModeMatrix& v,
                                  const FockBasis& in_basis,
                                  const FockBasis& out_basis,
                                  const TransferOptions& opts = {});

/// Permanent of a square matrix by Ryser's inclusion-exclusion formula.
cplx ryser_permanent(const CMat& a);

/// Success probability and fidelity of a lifted transfer against a target:
/// P = Tr(W^dag W)/Tr(T^dag T), F = |Tr(W^dag T)/Tr(T^dag T)|^2 / P.
/// Throws ConfigError when P vanishes (fidelity undefined).
struct FidelitySuccess {
  double fidelity = 0.0;
  double success = 0.0;
};
FidelitySuccess fidelity_success(const CMat& w, const CMat& t);
FidelitySuccess fidelity_success(const FockTransfer& w, const TargetGate& t);

}  // namespace qfp

#endif  // QFP_TRANSFER_HPP
