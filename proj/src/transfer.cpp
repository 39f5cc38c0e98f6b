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

#include "qfp/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "qfp/bessel.hpp"
#include "qfp/errors.hpp"
#include "qfp/serialize.hpp"

namespace qfp {

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// 1 / sqrt(prod_m occ_m!) for one state.
double occ_norm(const FockState& s) {
  double f = 1.0;
  for (int o : s.occ) f *= factorial(o);
  return 1.0 / std::sqrt(f);
}

/// Direct Eq.-style permanent: sum over all N! permutations of the input
/// assignment, repeated terms included.
cplx direct_entry(const CMat& v, const std::vector<int>& out_assign,
                  std::vector<int> perm, const std::vector<int>& in_assign) {
  const std::size_t n = out_assign.size();
  std::iota(perm.begin(), perm.end(), 0);
  cplx sum(0.0, 0.0);
  do {
    cplx prod(1.0, 0.0);
    for (std::size_t p = 0; p < n; ++p)
      prod *= v(out_assign[p],
                in_assign[static_cast<std::size_t>(perm[p])]);
    sum += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum;
}

cplx ryser_entry(const CMat& v, const std::vector<int>& out_assign,
                 const std::vector<int>& in_assign) {
  const int n = static_cast<int>(out_assign.size());
  CMat b(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      b(p, q) = v(out_assign[static_cast<std::size_t>(p)],
                  in_assign[static_cast<std::size_t>(q)]);
  return ryser_permanent(b);
}

FockTransfer lift(const ModeMatrix& v, const FockBasis& in_basis,
                  const FockBasis& out_basis, const TransferOptions& opts,
                  bool parallel) {
  if (in_basis.photons != out_basis.photons)
    throw ConfigError("fock_transfer: photon numbers differ between bases");
  if (in_basis.modes != v.m.cols() || out_basis.modes != v.m.rows())
    throw ConfigError(
        "fock_transfer: basis mode counts do not span the mode matrix");
  const int n = in_basis.photons;
  const std::size_t din = in_basis.dim();
  const std::size_t dout = out_basis.dim();
  if (din == 0 || dout == 0)
    throw ConfigError("fock_transfer: empty basis");

  PermanentBackend backend = opts.backend;
  if (backend == PermanentBackend::Auto)
    backend = n <= 3 ? PermanentBackend::Direct : PermanentBackend::Ryser;
  const double per_entry = backend == PermanentBackend::Direct
                               ? factorial(n) * std::max(1, n)
                               : std::ldexp(static_cast<double>(n), n);
  if (per_entry * static_cast<double>(din) * static_cast<double>(dout) >
      opts.budget)
    throw ResourceError("fock_transfer: permanent workload exceeds budget");

  std::vector<std::vector<int>> in_assign(din), out_assign(dout);
  std::vector<double> in_norm(din), out_norm(dout);
  for (std::size_t j = 0; j < din; ++j) {
    in_assign[j] = assignment_of(in_basis.states[j]);
    in_norm[j] = occ_norm(in_basis.states[j]);
  }
  for (std::size_t i = 0; i < dout; ++i) {
    out_assign[i] = assignment_of(out_basis.states[i]);
    out_norm[i] = occ_norm(out_basis.states[i]);
  }

  FockTransfer out;
  out.in_basis = in_basis;
  out.out_basis = out_basis;
  out.w = CMat::Zero(static_cast<Eigen::Index>(dout),
                     static_cast<Eigen::Index>(din));

  const long long total = static_cast<long long>(din * dout);
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (long long idx = 0; idx < total; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / din;
    const std::size_t j = static_cast<std::size_t>(idx) % din;
    std::vector<int> perm(static_cast<std::size_t>(n));
    const cplx sum =
        backend == PermanentBackend::Direct
            ? direct_entry(v.m, out_assign[i], perm, in_assign[j])
            : ryser_entry(v.m, out_assign[i], in_assign[j]);
    out.w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        sum * out_norm[i] * in_norm[j];
  }
  return out;
}

nlohmann::json basis_to_json(const FockBasis& b) {
  nlohmann::json states = nlohmann::json::array();
  for (const FockState& s : b.states) states.push_back(s.occ);
  return nlohmann::json{
      {"photons", b.photons}, {"modes", b.modes}, {"states", states}};
}

FockBasis basis_from_json(const nlohmann::json& j, const std::string& ctx) {
  require_keys(j, {"photons", "modes", "states"}, ctx);
  FockBasis b;
  b.photons = get_required<int>(j, "photons", ctx);
  b.modes = get_required<int>(j, "modes", ctx);
  for (const auto& s : j.at("states")) {
    FockState f{s.get<std::vector<int>>()};
    if (static_cast<int>(f.occ.size()) != b.modes || f.total() != b.photons)
      throw ConfigError(ctx + ": inconsistent basis state");
    b.states.push_back(std::move(f));
  }
  return b;
}

}  // namespace

nlohmann::json FockTransfer::to_json() const {
  nlohmann::json j = mat_to_json(w);
  j["in_basis"] = basis_to_json(in_basis);
  j["out_basis"] = basis_to_json(out_basis);
  return j;
}

FockTransfer FockTransfer::from_json(const nlohmann::json& j) {
  require_keys(j, {"rows", "cols", "data", "in_basis", "out_basis"},
               "fock transfer");
  FockTransfer t;
  t.w = mat_from_json(j);
  t.in_basis = basis_from_json(j.at("in_basis"), "fock transfer in_basis");
  t.out_basis = basis_from_json(j.at("out_basis"), "fock transfer out_basis");
  if (t.w.rows() != static_cast<Eigen::Index>(t.out_basis.dim()) ||
      t.w.cols() != static_cast<Eigen::Index>(t.in_basis.dim()))
    throw ConfigError("fock transfer: matrix shape disagrees with bases");
  return t;
}

std::vector<FockState> TargetGate::fock_states(const Window& w) const {
  std::vector<FockState> out;
  out.reserve(logical_assignments.size());
  for (const auto& bins : logical_assignments) {
    std::vector<int> modes_of_photons;
    modes_of_photons.reserve(bins.size());
    for (int bin : bins) modes_of_photons.push_back(w.index_of(bin));
    out.push_back(state_from_assignment(modes_of_photons, w.size()));
  }
  return out;
}

TargetGate target_gate(const std::string& label, int order, double alpha,
                       double theta) {
  TargetGate g;
  g.label = label;
  if (label == "hadamard") {
    g.t = CMat(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    g.t << s, s, s, -s;
    g.logical_assignments = {{0}, {1}};
  } else if (label == "tritter" || label == "dft") {
    const int d = label == "tritter" ? 3 : order;
    if (d < 1) throw ConfigError("target_gate: dft requires order >= 1");
    g.t = CMat(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        g.t(r, c) = std::polar(1.0 / std::sqrt(static_cast<double>(d)),
                               2.0 * kPi * r * c / d);
    for (int i = 0; i < d; ++i) g.logical_assignments.push_back({i});
  } else if (label == "identity") {
    if (order < 1) throw ConfigError("target_gate: identity requires order");
    g.t = CMat::Identity(order, order);
    for (int i = 0; i < order; ++i) g.logical_assignments.push_back({i});
  } else if (label == "cnot") {
    g.t = CMat::Zero(4, 4);
    g.t(0, 0) = 1.0;
    g.t(1, 1) = 1.0;
    g.t(2, 3) = 1.0;
    g.t(3, 2) = 1.0;
    g.photons = 2;
    // Control bins (0, 6), target bins (7, 8); logical order 00,01,10,11.
    g.logical_assignments = {{0, 7}, {0, 8}, {6, 7}, {6, 8}};
  } else if (label == "tunable_bs") {
    g.t = tunable_bs_w(alpha, theta);
    g.logical_assignments = {{0}, {1}};
  } else {
    throw ConfigError("target_gate: unknown label '" + label + "'");
  }
  if (label != "tunable_bs") {
    // Built-in logical gates are unitary by construction; guard regressions.
    const CMat gram = g.t.adjoint() * g.t;
    if (max_abs_diff(gram, CMat::Identity(g.t.rows(), g.t.cols())) > 1e-12)
      throw ToleranceError("target_gate: non-unitary gate table");
  }
  return g;
}

ModeMatrix cnot_reference_multiport() {
  const double s = 1.0 / std::sqrt(3.0);
  CMat v = CMat::Zero(9, 9);
  // Logical block, rows/cols (C0, C1, T0, T1) = bins (0, 6, 7, 8):
  //   [[ s, 0, 0, 0],
  //    [ 0,-s, s, s],
  //    [ 0, s, s, 0],
  //    [ 0, s, 0, s]]
  // Its two-photon permanents reproduce CNOT/3 on the logical states: the
  // diagonal terms cancel against the exchange term for the control-1
  // inputs, leaving only the flipped output.
  v(0, 0) = s;
  v(6, 6) = -s;
  v(6, 7) = s;
  v(6, 8) = s;
  v(7, 6) = s;
  v(7, 7) = s;
  v(8, 6) = s;
  v(8, 8) = s;
  // Out-of-space components that make the four logical columns orthonormal.
  v(1, 0) = std::sqrt(2.0 / 3.0);
  v(2, 7) = s;
  v(2, 8) = -s;
  // Complete columns {1,2,3,4,5} by Gram-Schmidt over the standard basis.
  std::vector<int> have = {0, 6, 7, 8};
  const int want[] = {1, 2, 3, 4, 5};
  std::size_t wi = 0;
  for (int cand = 0; cand < 9 && wi < 5; ++cand) {
    Eigen::VectorXcd col = Eigen::VectorXcd::Zero(9);
    col(cand) = 1.0;
    for (int h : have) col -= v.col(h) * (v.col(h).adjoint() * col)(0);
    const double nrm = col.norm();
    if (nrm < 1e-9) continue;
    v.col(want[wi]) = col / nrm;
    have.push_back(want[wi]);
    ++wi;
  }
  if (max_abs_diff(v.adjoint() * v, CMat::Identity(9, 9)) > 1e-12)
    throw ToleranceError("cnot_reference_multiport: completion not unitary");
  ModeMatrix out;
  out.m = v;
  out.window = Window{0, 8, 0};
  return out;
}

CMat tunable_bs_w(double alpha, double theta) {
  const int cap = std::max(60, static_cast<int>(std::ceil(std::fabs(theta))) +
                                   40);
  const auto j = bessel_jn(cap, theta);
  double s = 0.0;
  for (int k = 1; k <= cap; ++k) {
    const double term = j[static_cast<std::size_t>(k)] *
                        j[static_cast<std::size_t>(k - 1)];
    s += term;
    if (std::fabs(term) < 1e-15 && k > std::fabs(theta)) break;
  }
  const double j0sq = j[0] * j[0];
  const cplx eia = std::polar(1.0, alpha);
  const cplx half_rest = (1.0 + eia) * (1.0 - j0sq) * 0.5;
  CMat w(2, 2);
  w(0, 0) = j0sq + half_rest;
  w(0, 1) = (1.0 - eia) * s;
  w(1, 0) = (1.0 - eia) * s;
  w(1, 1) = eia * j0sq + half_rest;
  return w;
}

FockTransfer fock_transfer(const ModeMatrix& v, const FockBasis& in_basis,
                           const FockBasis& out_basis,
                           const TransferOptions& opts) {
  return lift(v, in_basis, out_basis, opts, true);
}

FockTransfer fock_transfer_serial(const ModeMatrix& v,
                                  const FockBasis& in_basis,
                                  const FockBasis& out_basis,
                                  const TransferOptions& opts) {
  return lift(v, in_basis, out_basis, opts, false);
}

cplx ryser_permanent(const CMat& a) {
  if (a.rows() != a.cols()) throw ConfigError("ryser_permanent: not square");
  const int n = static_cast<int>(a.rows());
  if (n == 0) return cplx(1.0, 0.0);
  if (n > 30) throw ResourceError("ryser_permanent: order too large");
  // Gray-code subset walk: maintain row sums over the current column set.
  std::vector<cplx> rowsum(static_cast<std::size_t>(n), cplx(0.0, 0.0));
  cplx total(0.0, 0.0);
  std::uint32_t prev = 0;
  const std::uint32_t count = 1u << n;
  for (std::uint32_t i = 1; i < count; ++i) {
    const std::uint32_t gray = i ^ (i >> 1);
    const std::uint32_t changed = gray ^ prev;
    int col = 0;
    while (!((changed >> col) & 1u)) ++col;
    const double sign_col = (gray & changed) ? 1.0 : -1.0;
    for (int r = 0; r < n; ++r)
      rowsum[static_cast<std::size_t>(r)] += sign_col * a(r, col);
    cplx prod(1.0, 0.0);
    for (int r = 0; r < n; ++r) prod *= rowsum[static_cast<std::size_t>(r)];
    const int bits = __builtin_popcount(gray);
    total += ((n - bits) % 2 == 0 ? 1.0 : -1.0) * prod;
    prev = gray;
  }
  return total;
}

FidelitySuccess fidelity_success(const CMat& w, const CMat& t) {
  if (w.rows() != t.rows() || w.cols() != t.cols())
    throw ConfigError("fidelity_success: dimension mismatch");
  const double denom = t.squaredNorm();
  if (denom == 0.0)
    throw ConfigError("fidelity_success: zero target");
  FidelitySuccess r;
  r.success = w.squaredNorm() / denom;
  if (r.success <= 0.0)
    throw ConfigError("fidelity_success: vanishing success probability");
  const cplx overlap = frob_inner(w, t) / denom;
  r.fidelity = std::norm(overlap) / r.success;
  return r;
}

FidelitySuccess fidelity_success(const FockTransfer& w, const TargetGate& t) {
  return fidelity_success(w.w, t.t);
}

}  // namespace qfp
