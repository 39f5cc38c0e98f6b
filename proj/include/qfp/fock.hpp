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

#ifndef QFP_FOCK_HPP
#define QFP_FOCK_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace qfp {

/// Photon-number occupancy over a contiguous block of modes.  Value type:
/// instances are never mutated after construction.
struct FockState {
  std::vector<int> occ;

  int total() const;
  bool operator==(const FockState& o) const { return occ == o.occ; }
  std::string str() const;  // e.g. "|2,0,1>"
};

/// Number of Fock states with `photons` photons in `modes` modes,
/// C(photons + modes - 1, modes - 1), computed overflow-checked.
std::uint64_t basis_dimension(int photons, int modes);

/// Enumerated N-photon basis on M modes.  States are held in descending
/// lexicographic order on the occupancy vector (all photons in the first
/// mode come first), which is the canonical order used across the toolkit.
struct FockBasis {
  int photons = 0;
  int modes = 0;
  std::vector<FockState> states;

  std::size_t dim() const { return states.size(); }
  /// Index of a state in this basis; throws ConfigError if absent.
  std::size_t index_of(const FockState& s) const;
  bool contains(const FockState& s) const;
};

/// Full basis of `photons` photons in `modes` modes.  Throws ResourceError
/// if the dimension exceeds `dim_cap`.
FockBasis enumerate_basis(int photons, int modes,
                          std::uint64_t dim_cap = 1000000);

/// Sub-basis containing exactly the kept states, in parent order.  Keeping a
/// state not present in the parent raises ConfigError; an empty result
/// raises ConfigError unless `allow_empty`.
FockBasis restrict_basis(const FockBasis& parent,
                         const std::vector<FockState>& keep,
                         bool allow_empty = false);

/// Sorted mode-assignment list of a state: one entry per photon, the mode
/// index it occupies, ascending.  |2,0,1> -> {0,0,2}.
std::vector<int> assignment_of(const FockState& s);

/// Inverse of assignment_of for a given mode count.
FockState state_from_assignment(const std::vector<int>& modes_of_photons,
                                int modes);

}  // namespace qfp

#endif  // QFP_FOCK_HPP
