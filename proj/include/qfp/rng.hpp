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

#ifndef QFP_RNG_HPP
#define QFP_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace qfp {

/// Seeded random stream.
///
/// All randomness in the toolkit flows from a single root seed through named
/// substreams.  The derivation is fixed and documented so that every consumer
/// (simulators, samplers, optimizer starts) is reproducible independently of
/// call order:
///
///   substream_seed(root, tag, index) =
///       splitmix64(splitmix64(root ^ fnv1a64(tag)) + index)
///
/// where fnv1a64 is the 64-bit FNV-1a hash of the tag bytes and splitmix64 is
/// the standard SplitMix64 finalizer.  The engine is std::mt19937_64 (its
/// output sequence for a given seed is fixed by the C++ standard).  The
/// uniform/normal/Poisson transforms below are implemented here rather than
/// with std::*_distribution so that generated sequences do not depend on the
/// standard-library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static std::uint64_t fnv1a64(std::string_view bytes);
  static std::uint64_t splitmix64(std::uint64_t x);
  static std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                   std::uint64_t index = 0);

  /// New stream derived from `root` for the given tag/index.
  static Rng substream(std::uint64_t root, std::string_view tag,
                       std::uint64_t index = 0) {
    return Rng(derive_seed(root, tag, index));
  }

  /// Raw 64-bit draw.
  std::uint64_t bits() { return eng_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  /// Complex Ginibre entry: re and im independently N(0, 1).
  std::complex<double> cgauss() {
    const double re = normal();
    return {re, normal()};
  }

  /// Exact Poisson draw.  Sequential inversion for small means, transformed
  /// rejection with squeeze (Hörmann's PTRD) for mean >= 10.
  long long poisson(double mean);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qfp

#endif  // QFP_RNG_HPP
