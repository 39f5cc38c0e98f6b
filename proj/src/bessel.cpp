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

#include "qfp/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace qfp {

namespace {

// Two leading series terms; relative error O((x/2)^4) < 1e-24 for |x| < 1e-6.
std::vector<double> bessel_jn_small(int nmax, double x) {
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  const double h = 0.5 * x;
  double lead = 1.0;  // (x/2)^n / n!
  for (int n = 0; n <= nmax; ++n) {
    out[static_cast<std::size_t>(n)] = lead * (1.0 - h * h / (n + 1.0));
    lead *= h / (n + 1.0);
    if (lead == 0.0) break;
  }
  return out;
}

}  // namespace

std::vector<double> bessel_jn(int nmax, double x) {
  if (nmax < 0) throw std::invalid_argument("bessel_jn: nmax must be >= 0");
  const double ax = std::fabs(x);
  if (ax < 1e-6) {
    auto out = bessel_jn_small(nmax, ax);
    if (x < 0.0)
      for (std::size_t n = 1; n < out.size(); n += 2) out[n] = -out[n];
    return out;
  }

  // Miller's downward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, started well
  // above both the requested order and the turning point |x|, normalized at
  // the end with J_0 + 2 sum_{k>=1} J_{2k} = 1.
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  const int turn = static_cast<int>(std::ceil(ax));
  const int high = std::max(nmax, turn);
  const int start =
      high + 22 + static_cast<int>(1.5 * std::sqrt(static_cast<double>(high)));

  double jp = 0.0;     // J_{k+1}
  double jc = 1e-300;  // J_k, arbitrary tiny seed
  double even_sum = 0.0;
  for (int k = start; k >= 1; --k) {
    const double jm = (2.0 * k / ax) * jc - jp;  // J_{k-1}
    jp = jc;
    jc = jm;
    const int ord = k - 1;
    if (ord > 0 && ord % 2 == 0) even_sum += jc;
    if (ord <= nmax) out[static_cast<std::size_t>(ord)] = jc;
    if (std::fabs(jc) > 1e250) {
      jp *= 1e-250;
      jc *= 1e-250;
      even_sum *= 1e-250;
      for (auto& v : out) v *= 1e-250;
    }
  }
  const double scale = 1.0 / (jc + 2.0 * even_sum);  // jc is unnormalized J_0
  for (auto& v : out) v *= scale;
  if (x < 0.0)
    for (std::size_t n = 1; n < out.size(); n += 2) out[n] = -out[n];
  return out;
}

double bessel_j(int n, double x) {
  const int an = n < 0 ? -n : n;
  const double v = bessel_jn(an, x)[static_cast<std::size_t>(an)];
  return (n < 0 && (an % 2 == 1)) ? -v : v;
}

}  // namespace qfp
