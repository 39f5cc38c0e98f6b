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
#include <vector>

#include "doctest.h"

namespace {

// Independent oracle: ascending power series in long double,
//   J_n(x) = sum_k (-1)^k / (k! (n+k)!) (x/2)^(n+2k).
// Accurate to ~1e-14 for the |x| <= 12, n <= 16 range probed here.
long double series_jn(int n, long double x) {
  const long double h = x / 2.0L;
  long double term = 1.0L;
  for (int i = 1; i <= n; ++i) term *= h / i;
  long double sum = term;
  for (int k = 1; k <= 60; ++k) {
    term *= -(h * h) / (static_cast<long double>(k) * (n + k));
    sum += term;
    if (std::fabs(term) < 1e-25L * (std::fabs(sum) + 1e-30L)) break;
  }
  return sum;
}

}  // namespace

TEST_CASE("bessel matches power-series oracle across orders and arguments") {
  for (double x : {0.05, 0.3, 0.8287520327924520, 1.5, 2.7, 4.2, 6.0, 9.1,
                   11.5, 12.0}) {
    const auto j = qfp::bessel_jn(16, x);
    for (int n = 0; n <= 16; ++n) {
      const double ref = static_cast<double>(series_jn(n, x));
      CHECK(j[static_cast<std::size_t>(n)] ==
            doctest::Approx(ref).epsilon(1e-13).scale(1.0));
    }
  }
}

TEST_CASE("bessel matches scipy.special.jv spot values") {
  // Reference values computed with scipy.special.jv (SciPy 1.15).
  CHECK(qfp::bessel_j(0, 0.5) == doctest::Approx(9.3846980724081297e-01)
                                     .epsilon(1e-13));
  CHECK(qfp::bessel_j(3, 2.7) == doctest::Approx(2.5404529158722744e-01)
                                     .epsilon(1e-13));
  CHECK(qfp::bessel_j(10, 6.0) == doctest::Approx(6.9639810027903211e-03)
                                      .epsilon(1e-11));
  CHECK(qfp::bessel_j(0, 11.5) == doctest::Approx(-6.7653948111665044e-02)
                                      .epsilon(1e-11));
  CHECK(qfp::bessel_j(7, 12.0) == doctest::Approx(-1.7025380412720795e-01)
                                      .epsilon(1e-11));
}

TEST_CASE("bessel negative order and negative argument parity") {
  for (double x : {0.7, 3.3, 8.0}) {
    for (int n = 0; n <= 9; ++n) {
      const double jn = qfp::bessel_j(n, x);
      const double sign = (n % 2 == 0) ? 1.0 : -1.0;
      CHECK(qfp::bessel_j(-n, x) == doctest::Approx(sign * jn).epsilon(1e-12));
      CHECK(qfp::bessel_j(n, -x) == doctest::Approx(sign * jn).epsilon(1e-12));
    }
  }
}

TEST_CASE("bessel three-term recurrence residual is tiny") {
  for (double x : {0.9, 2.2, 5.5, 10.0}) {
    const auto j = qfp::bessel_jn(14, x);
    for (int n = 1; n <= 12; ++n) {
      const double lhs = j[static_cast<std::size_t>(n - 1)] +
                         j[static_cast<std::size_t>(n + 1)];
      const double rhs = (2.0 * n / x) * j[static_cast<std::size_t>(n)];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("bessel normalization sum rule J0^2 + 2 sum Jk^2 = 1") {
  for (double x : {0.4, 1.9, 4.8, 11.0}) {
    const int nmax = 40;
    const auto j = qfp::bessel_jn(nmax, x);
    double s = j[0] * j[0];
    for (int k = 1; k <= nmax; ++k)
      s += 2.0 * j[static_cast<std::size_t>(k)] * j[static_cast<std::size_t>(k)];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("bessel tiny-argument branch agrees with leading series") {
  const double x = 1e-8;
  const auto j = qfp::bessel_jn(4, x);
  CHECK(j[0] == doctest::Approx(1.0 - x * x / 4.0).epsilon(1e-15));
  CHECK(j[1] == doctest::Approx(x / 2.0).epsilon(1e-12));
  CHECK(j[2] == doctest::Approx(x * x / 8.0).epsilon(1e-12));
  CHECK(qfp::bessel_j(0, 0.0) == doctest::Approx(1.0));
  CHECK(qfp::bessel_j(1, 0.0) == doctest::Approx(0.0));
}
