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

#include "qfp/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "qfp/errors.hpp"
#include "qfp/serialize.hpp"

namespace qfp {
namespace {

const char* kConvention =
    "choi: output-kron-input, trace 1; chi basis (I, X, Y, Z)";

void check_finite(const CMat& m, const std::string& context) {
  if (!m.allFinite()) throw ConfigError(context + ": non-finite entries");
}

double hermiticity_defect(const CMat& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Eigenvalues of a Hermitian matrix, with the clipping contract: values in
/// [-kDensityTol, 0) are clipped to zero, values below raise ToleranceError.
struct ClippedEig {
  Eigen::VectorXd values;
  CMat vectors;
};

ClippedEig clipped_hermitian_eig(const CMat& m, const std::string& context) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(m);
  if (eig.info() != Eigen::Success)
    throw ToleranceError(context + ": eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -kDensityTol)
      throw ToleranceError(context + ": eigenvalue " + std::to_string(values(i)) +
                           " below the positivity tolerance");
    if (values(i) < 0.0) values(i) = 0.0;
  }
  return {std::move(values), eig.eigenvectors()};
}

/// PSD square root via Hermitian eigendecomposition with clipping.
CMat hermitian_sqrt(const CMat& m, const std::string& context) {
  const ClippedEig eig = clipped_hermitian_eig(m, context);
  return eig.vectors * eig.values.cwiseSqrt().asDiagonal() *
         eig.vectors.adjoint();
}

/// Column-stacking with the Choi index convention: vec(A)[o * d_in + i] =
/// A(o, i).
Eigen::VectorXcd choi_vec(const CMat& a) {
  const Eigen::Index d_out = a.rows(), d_in = a.cols();
  Eigen::VectorXcd v(d_out * d_in);
  for (Eigen::Index o = 0; o < d_out; ++o)
    for (Eigen::Index i = 0; i < d_in; ++i) v(o * d_in + i) = a(o, i);
  return v;
}

CMat choi_unvec(const Eigen::VectorXcd& v, int d_out, int d_in) {
  CMat a(d_out, d_in);
  for (int o = 0; o < d_out; ++o)
    for (int i = 0; i < d_in; ++i) a(o, i) = v(o * d_in + i);
  return a;
}

/// Orthonormal frame vectors B_j = vec(sigma_j) / sqrt(2): the chi matrix is
/// the Choi matrix expressed in this frame.
const std::array<Eigen::VectorXcd, 4>& chi_frame() {
  static const std::array<Eigen::VectorXcd, 4> frame = [] {
    std::array<Eigen::VectorXcd, 4> f;
    const auto& sigma = pauli_basis();
    for (int j = 0; j < 4; ++j) f[j] = choi_vec(sigma[j]) / std::sqrt(2.0);
    return f;
  }();
  return frame;
}

}  // namespace

void DensityMatrix::validate() const {
  if (rho.rows() == 0 || rho.rows() != rho.cols())
    throw ConfigError("DensityMatrix: matrix must be square and non-empty");
  check_finite(rho, "DensityMatrix");
  if (hermiticity_defect(rho) > kDensityTol)
    throw ToleranceError("DensityMatrix: not Hermitian within tolerance");
  if (std::abs(rho.trace() - cplx(1.0, 0.0)) > kDensityTol)
    throw ToleranceError("DensityMatrix: trace differs from 1 beyond tolerance");
  clipped_hermitian_eig(rho, "DensityMatrix");
}

DensityMatrix DensityMatrix::pure(const Eigen::VectorXcd& psi) {
  const double norm = psi.norm();
  if (psi.size() == 0 || norm == 0.0)
    throw ConfigError("DensityMatrix::pure: zero state vector");
  const Eigen::VectorXcd unit = psi / norm;
  return DensityMatrix{unit * unit.adjoint()};
}

DensityMatrix DensityMatrix::maximally_mixed(int d) {
  if (d < 1) throw ConfigError("DensityMatrix::maximally_mixed: dimension < 1");
  return DensityMatrix{CMat::Identity(d, d) / static_cast<double>(d)};
}

int KrausSet::dim_in() const {
  validate_shapes();
  return static_cast<int>(ops[0].cols());
}

int KrausSet::dim_out() const {
  validate_shapes();
  return static_cast<int>(ops[0].rows());
}

void KrausSet::validate_shapes() const {
  if (ops.empty()) throw ConfigError("KrausSet: no operators");
  const Eigen::Index rows = ops[0].rows(), cols = ops[0].cols();
  if (rows == 0 || cols == 0) throw ConfigError("KrausSet: empty operator");
  for (const CMat& a : ops) {
    if (a.rows() != rows || a.cols() != cols)
      throw ConfigError("KrausSet: operators have inconsistent shapes");
    check_finite(a, "KrausSet");
  }
  if (!(removed_norm > 0.0) || !std::isfinite(removed_norm))
    throw ConfigError("KrausSet: removed_norm must be finite and positive");
}

void KrausSet::validate() const {
  validate_shapes();
  CMat sum = CMat::Zero(ops[0].cols(), ops[0].cols());
  for (const CMat& a : ops) sum += a.adjoint() * a;
  const double defect =
      (sum - CMat::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();
  if (defect > kDensityTol)
    throw ToleranceError(
        "KrausSet: operators do not resolve the identity (defect " +
        std::to_string(defect) + "); not trace preserving");
}

const std::array<CMat, 4>& pauli_basis() {
  static const std::array<CMat, 4> basis = [] {
    std::array<CMat, 4> b;
    for (auto& m : b) m.resize(2, 2);
    b[0] << 1, 0, 0, 1;
    b[1] << 0, 1, 1, 0;
    b[2] << 0, cplx(0, -1), cplx(0, 1), 0;
    b[3] << 1, 0, 0, -1;
    return b;
  }();
  return basis;
}

KrausSet unitary_kraus(const CMat& u) {
  KrausSet k;
  k.ops = {u};
  k.validate();
  return k;
}

KrausSet channel_from_mode_matrix(const CMat& w) {
  if (w.rows() == 0 || w.cols() == 0)
    throw ConfigError("channel_from_mode_matrix: empty operator");
  check_finite(w, "channel_from_mode_matrix");
  const Eigen::JacobiSVD<CMat> svd(w);
  const double op_norm = svd.singularValues()(0);
  if (op_norm == 0.0)
    throw ConfigError("channel_from_mode_matrix: zero operator has no channel");
  KrausSet k;
  k.ops = {w / op_norm};
  k.removed_norm = op_norm;
  return k;
}

DensityMatrix apply_channel(const KrausSet& k, const DensityMatrix& rho_in) {
  k.validate_shapes();
  rho_in.validate();
  if (k.dim_in() != rho_in.dim())
    throw ConfigError("apply_channel: channel input dimension " +
                      std::to_string(k.dim_in()) + " does not match state dimension " +
                      std::to_string(rho_in.dim()));
  CMat out = CMat::Zero(k.dim_out(), k.dim_out());
  for (const CMat& a : k.ops) out += a * rho_in.rho * a.adjoint();
  return DensityMatrix{std::move(out)};
}

PostselectedState apply_postselected(const KrausSet& k, const DensityMatrix& rho_in) {
  k.validate_shapes();
  rho_in.validate();
  if (k.dim_in() != rho_in.dim())
    throw ConfigError("apply_postselected: dimension mismatch");
  CMat out = CMat::Zero(k.dim_out(), k.dim_out());
  for (const CMat& a : k.ops) out += a * rho_in.rho * a.adjoint();
  const double weight = out.trace().real();
  if (!(weight > 1e-300))
    throw ToleranceError(
        "apply_postselected: channel annihilates the state; conditional "
        "output is undefined");
  return PostselectedState{DensityMatrix{out / weight}, weight};
}

void ChoiMatrix::validate() const {
  if (dim_in < 1 || dim_out < 1)
    throw ConfigError("ChoiMatrix: dimensions must be positive");
  const Eigen::Index d = static_cast<Eigen::Index>(dim_in) * dim_out;
  if (phi.rows() != d || phi.cols() != d)
    throw ConfigError("ChoiMatrix: matrix size does not match dim_in * dim_out");
  check_finite(phi, "ChoiMatrix");
  if (hermiticity_defect(phi) > kDensityTol)
    throw ToleranceError("ChoiMatrix: not Hermitian within tolerance");
  if (std::abs(phi.trace() - cplx(1.0, 0.0)) > kDensityTol)
    throw ToleranceError("ChoiMatrix: trace differs from 1 beyond tolerance");
  clipped_hermitian_eig(phi, "ChoiMatrix");
}

bool ChoiMatrix::trace_preserving(double tol) const {
  validate();
  CMat reduced = CMat::Zero(dim_in, dim_in);
  for (int o = 0; o < dim_out; ++o)
    reduced += phi.block(static_cast<Eigen::Index>(o) * dim_in,
                         static_cast<Eigen::Index>(o) * dim_in, dim_in, dim_in);
  const CMat target = CMat::Identity(dim_in, dim_in) / static_cast<double>(dim_in);
  return (reduced - target).cwiseAbs().maxCoeff() <= tol;
}

void ProcessMatrix::validate() const {
  if (chi.rows() != 4 || chi.cols() != 4)
    throw ConfigError("ProcessMatrix: chi must be 4x4");
  check_finite(chi, "ProcessMatrix");
  if (hermiticity_defect(chi) > kDensityTol)
    throw ToleranceError("ProcessMatrix: not Hermitian within tolerance");
  clipped_hermitian_eig(chi, "ProcessMatrix");
}

bool ProcessMatrix::trace_preserving(double tol) const {
  validate();
  const auto& sigma = pauli_basis();
  CMat sum = CMat::Zero(2, 2);
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k)
      sum += chi(j, k) * sigma[k].adjoint() * sigma[j];
  return (sum - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() <= tol;
}

ChoiMatrix choi_from_kraus(const KrausSet& k) {
  k.validate_shapes();
  const int d_in = k.dim_in(), d_out = k.dim_out();
  CMat phi = CMat::Zero(static_cast<Eigen::Index>(d_in) * d_out,
                        static_cast<Eigen::Index>(d_in) * d_out);
  for (const CMat& a : k.ops) {
    const Eigen::VectorXcd v = choi_vec(a);
    phi += v * v.adjoint();
  }
  const double tr = phi.trace().real();
  if (!(tr > 1e-300))
    throw ConfigError("choi_from_kraus: zero channel has no normalized Choi form");
  ChoiMatrix out{phi / tr, d_in, d_out};
  out.validate();
  return out;
}

KrausSet kraus_from_choi(const ChoiMatrix& phi) {
  phi.validate();
  const ClippedEig eig = clipped_hermitian_eig(phi.phi, "kraus_from_choi");
  KrausSet k;
  // Scale restores the resolution of identity for trace-preserving input:
  // the trace-1 convention divided the unnormalized Choi matrix by d_in.
  const double scale = static_cast<double>(phi.dim_in);
  for (Eigen::Index l = 0; l < eig.values.size(); ++l) {
    const double lambda = eig.values(l);
    if (lambda <= 1e-14) continue;
    k.ops.push_back(choi_unvec(std::sqrt(scale * lambda) * eig.vectors.col(l),
                               phi.dim_out, phi.dim_in));
  }
  if (k.ops.empty())
    throw ToleranceError("kraus_from_choi: Choi matrix has no positive weight");
  return k;
}

ProcessMatrix chi_from_choi(const ChoiMatrix& phi) {
  phi.validate();
  if (phi.dim_in != 2 || phi.dim_out != 2)
    throw ConfigError("chi_from_choi: the Pauli process matrix is defined for "
                      "qubit channels only");
  const auto& frame = chi_frame();
  CMat chi(4, 4);
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k)
      chi(j, k) = frame[j].dot(phi.phi * frame[k]);
  return ProcessMatrix{std::move(chi)};
}

ChoiMatrix choi_from_chi(const ProcessMatrix& chi) {
  chi.validate();
  const auto& frame = chi_frame();
  CMat phi = CMat::Zero(4, 4);
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k)
      phi += chi.chi(j, k) * frame[j] * frame[k].adjoint();
  ChoiMatrix out{std::move(phi), 2, 2};
  out.validate();
  return out;
}

double state_fidelity(const DensityMatrix& rho, const DensityMatrix& target) {
  rho.validate();
  target.validate();
  if (rho.dim() != target.dim())
    throw ConfigError("state_fidelity: dimension mismatch");
  const CMat root = hermitian_sqrt(target.rho, "state_fidelity");
  const CMat inner = root * rho.rho * root;
  const ClippedEig eig = clipped_hermitian_eig(inner, "state_fidelity");
  const double sum = eig.values.cwiseSqrt().sum();
  return std::clamp(sum * sum, 0.0, 1.0);
}

double process_fidelity(const ChoiMatrix& phi, const ChoiMatrix& target) {
  phi.validate();
  target.validate();
  if (phi.dim_in != target.dim_in || phi.dim_out != target.dim_out)
    throw ConfigError("process_fidelity: channel dimension mismatch");
  return state_fidelity(DensityMatrix{phi.phi}, DensityMatrix{target.phi});
}

nlohmann::json channel_to_json(const ChoiMatrix& phi) {
  phi.validate();
  nlohmann::json j;
  j["convention"] = kConvention;
  j["dim_in"] = phi.dim_in;
  j["dim_out"] = phi.dim_out;
  j["choi"] = mat_to_json(phi.phi);
  if (phi.dim_in == 2 && phi.dim_out == 2)
    j["chi"] = mat_to_json(chi_from_choi(phi).chi);
  return j;
}

ChoiMatrix channel_from_json(const nlohmann::json& j) {
  const std::string ctx = "channel_from_json";
  require_object(j, ctx);
  require_keys(j, {"convention", "dim_in", "dim_out", "choi", "chi"}, ctx);
  if (get_required<std::string>(j, "convention", ctx) != kConvention)
    throw ConfigError(ctx + ": unknown channel convention tag");
  ChoiMatrix phi;
  phi.dim_in = get_required<int>(j, "dim_in", ctx);
  phi.dim_out = get_required<int>(j, "dim_out", ctx);
  phi.phi = mat_from_json(get_required<nlohmann::json>(j, "choi", ctx));
  phi.validate();
  if (j.contains("chi")) {
    const CMat chi = mat_from_json(j.at("chi"));
    const CMat expected = chi_from_choi(phi).chi;
    if ((chi - expected).cwiseAbs().maxCoeff() > 1e-8)
      throw ConfigError(ctx + ": chi matrix is inconsistent with the Choi matrix");
  }
  return phi;
}

}  // namespace qfp
