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

#ifndef QFP_CHANNEL_HPP
#define QFP_CHANNEL_HPP

/// Black-box quantum channel algebra: Kraus sets, Choi matrices, Pauli-basis
/// process matrices, and state/process fidelities.
///
/// Conventions (recorded in serialized output):
///  - Choi matrices are trace-1 density matrices on H_out (x) H_in, i.e.
///    Phi = sum_{ij} E(|i><j|) (x) |i><j| / d_in, with the flattened index
///    o * d_in + i.  The partial trace over the output factor of a
///    trace-preserving channel is I / d_in.
///  - The qubit process matrix chi expands E(rho) = sum_{jk} chi_{jk}
///    sigma_j rho sigma_k in the Pauli basis (I, X, Y, Z).
///  - Postselected channels (one Kraus operator proportional to a lifted
///    transfer matrix W) carry no success probability; the operator norm
///    divided out at construction is kept as diagnostic metadata only, and
///    per-state renormalization happens in apply_postselected.

#include <array>
#include <vector>

#include "qfp/linalg.hpp"

#include "json.hpp"

namespace qfp {

/// Numerical tolerance for the Hermiticity / positivity / trace contracts
/// of density-like matrices, and the eigenvalue clipping window.
inline constexpr double kDensityTol = 1e-10;

/// A d x d density matrix: Hermitian, positive semidefinite (eigenvalues
/// above -kDensityTol), unit trace, all within kDensityTol.
struct DensityMatrix {
  CMat rho;

  int dim() const { return static_cast<int>(rho.rows()); }
  void validate() const;

  /// |psi><psi| for a nonzero vector (normalized internally).
  static DensityMatrix pure(const Eigen::VectorXcd& psi);
  /// I/d.
  static DensityMatrix maximally_mixed(int d);
};

/// A set of Kraus operators A_k mapping a d_in-dimensional input to a
/// d_out-dimensional output.  `validate` enforces the trace-preserving
/// contract sum_k A_k^dag A_k = I.
struct KrausSet {
  std::vector<CMat> ops;

  /// Diagnostic only: the operator norm divided out when this set was built
  /// from a raw (unnormalized) operator, 1 otherwise.  Not serialized into
  /// channel algebra; postselected channels have no success probability.
  double removed_norm = 1.0;

  int dim_in() const;
  int dim_out() const;
  void validate_shapes() const;
  void validate() const;
};

/// Trace-1 Choi matrix of a channel, on H_out (x) H_in.
struct ChoiMatrix {
  CMat phi;
  int dim_in = 0;
  int dim_out = 0;

  void validate() const;
  /// Whether the partial trace over the output equals I/d_in within `tol`.
  bool trace_preserving(double tol = kDensityTol) const;
};

/// Qubit process matrix: 4x4 chi over (I, X, Y, Z).
struct ProcessMatrix {
  CMat chi;

  void validate() const;
  /// Whether sum_{jk} chi_{jk} sigma_k^dag sigma_j = I within `tol`.
  bool trace_preserving(double tol = kDensityTol) const;
};

/// The Pauli basis (I, X, Y, Z) as 2x2 matrices.
const std::array<CMat, 4>& pauli_basis();

/// Single-Kraus unitary channel {U}.
KrausSet unitary_kraus(const CMat& u);

/// Postselected channel of a lifted transfer matrix: one Kraus operator
/// A1 = W / ||W||_op (so A1^dag A1 <= I), with the removed norm recorded as
/// diagnostic metadata.  Throws ConfigError for a zero operator.
KrausSet channel_from_mode_matrix(const CMat& w);

/// rho = sum_k A_k rho_in A_k^dag.  Checks dimensions only; trace is
/// preserved when the set satisfies the resolution-of-identity contract.
DensityMatrix apply_channel(const KrausSet& k, const DensityMatrix& rho_in);

/// A postselected output state and the probability weight discarded by the
/// renormalization (the trace of the unnormalized output).
struct PostselectedState {
  DensityMatrix state;
  double weight = 0.0;
};

/// rho = K(rho_in) / Tr K(rho_in).  Throws ToleranceError when the channel
/// maps the state to (numerically) zero.
PostselectedState apply_postselected(const KrausSet& k, const DensityMatrix& rho_in);

/// Choi matrix of a Kraus set (trace-normalized, so postselected
/// single-Kraus sets yield the Choi of their conditioned channel).
ChoiMatrix choi_from_kraus(const KrausSet& k);

/// Kraus operators from a Choi eigendecomposition.  Throws ToleranceError
/// when the Choi matrix has an eigenvalue below -kDensityTol.
KrausSet kraus_from_choi(const ChoiMatrix& phi);

/// Pauli process matrix of a qubit channel (dim_in = dim_out = 2).
ProcessMatrix chi_from_choi(const ChoiMatrix& phi);

/// Inverse of chi_from_choi.
ChoiMatrix choi_from_chi(const ProcessMatrix& chi);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho_T) rho sqrt(rho_T)))^2, clamped to
/// [0, 1].  Symmetric; 1 iff the states coincide.
double state_fidelity(const DensityMatrix& rho, const DensityMatrix& target);

/// State fidelity of the two (normalized) Choi matrices.
double process_fidelity(const ChoiMatrix& phi, const ChoiMatrix& target);

/// Canonical channel serialization: Choi form plus convention tag; the chi
/// matrix is emitted alongside for qubit channels.
nlohmann::json channel_to_json(const ChoiMatrix& phi);
ChoiMatrix channel_from_json(const nlohmann::json& j);

}  // namespace qfp

#endif  // QFP_CHANNEL_HPP
