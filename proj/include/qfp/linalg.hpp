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

#ifndef QFP_LINALG_HPP
#define QFP_LINALG_HPP

#include <complex>

#include <Eigen/Dense>
#include "json.hpp"

#include "qfp/rng.hpp"

namespace qfp {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

/// JSON encoding of complex scalars and matrices.  A complex number is a
/// two-element array [re, im]; a matrix is {"rows", "cols", "data"} with
/// data in row-major order.
nlohmann::json cplx_to_json(const cplx& z);
cplx cplx_from_json(const nlohmann::json& j);
nlohmann::json mat_to_json(const CMat& m);
CMat mat_from_json(const nlohmann::json& j);

/// Thin QR factor with the sign convention fixed so the decomposition is
/// unique: returns Q (cols(g) orthonormal columns) such that g = Q R with the
/// diagonal of R real and non-negative.
CMat qr_isometry(const CMat& g);

/// Haar-distributed random unitary (Ginibre draw followed by the
/// phase-corrected QR above).
CMat haar_unitary(int n, Rng& rng);

/// Frobenius inner product <a, b> = Tr(a^dagger b).
cplx frob_inner(const CMat& a, const CMat& b);

/// max_ij |a_ij - b_ij|.
double max_abs_diff(const CMat& a, const CMat& b);

}  // namespace qfp

#endif  // QFP_LINALG_HPP
