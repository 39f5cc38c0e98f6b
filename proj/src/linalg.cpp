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

#include "qfp/linalg.hpp"

#include "qfp/errors.hpp"

namespace qfp {

nlohmann::json cplx_to_json(const cplx& z) {
  return nlohmann::json::array({z.real(), z.imag()});
}

cplx cplx_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("complex value must be a [re, im] number pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

nlohmann::json mat_to_json(const CMat& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      data.push_back(cplx_to_json(m(r, c)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

CMat mat_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data"))
    throw ConfigError("matrix object must contain rows, cols, data");
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 ||
      data.size() != static_cast<std::size_t>(rows * cols))
    throw ConfigError("matrix data length does not match rows*cols");
  CMat m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = cplx_from_json(data[i++]);
  return m;
}

CMat qr_isometry(const CMat& g) {
  if (g.rows() < g.cols())
    throw std::invalid_argument("qr_isometry: need rows >= cols");
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ() * CMat::Identity(g.rows(), g.cols());
  const CMat r = qr.matrixQR().topRows(g.cols());
  for (Eigen::Index k = 0; k < g.cols(); ++k) {
    const cplx d = r(k, k);
    const double a = std::abs(d);
    // Rotate each column so the corresponding R diagonal is real >= 0.
    if (a > 0.0) q.col(k) *= d / a;
  }
  return q;
}

CMat haar_unitary(int n, Rng& rng) {
  if (n <= 0) throw std::invalid_argument("haar_unitary: n must be positive");
  CMat g(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) g(r, c) = rng.cgauss();
  return qr_isometry(g);
}

cplx frob_inner(const CMat& a, const CMat& b) {
  return (a.adjoint() * b).trace();
}

double max_abs_diff(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace qfp
