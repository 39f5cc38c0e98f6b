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

#ifndef QFP_BESSEL_HPP
#define QFP_BESSEL_HPP

#include <vector>

namespace qfp {

/// J_0(x) .. J_nmax(x) by Miller's downward recurrence with the
/// J_0 + 2*sum J_2k = 1 normalization.  Accurate to ~1e-13 for |x| <= 12,
/// which covers every modulation depth the toolkit accepts.
std::vector<double> bessel_jn(int nmax, double x);

/// Single J_n(x) for any integer n (negative orders via J_{-n} = (-1)^n J_n).
double bessel_j(int n, double x);

}  // namespace qfp

#endif  // QFP_BESSEL_HPP
