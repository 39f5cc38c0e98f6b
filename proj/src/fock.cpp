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

#include "qfp/fock.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "qfp/errors.hpp"

namespace qfp {

int FockState::total() const {
  return std::accumulate(occ.begin(), occ.end(), 0);
}

std::string FockState::str() const {
  std::ostringstream os;
  os << '|';
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (i) os << ',';
    os << occ[i];
  }
  os << '>';
  return os.str();
}

std::uint64_t basis_dimension(int photons, int modes) {
  if (photons < 0 || modes < 1)
    throw ConfigError("basis_dimension: need photons >= 0 and modes >= 1");
  // C(photons + modes - 1, modes - 1) with overflow detection.
  std::uint64_t result = 1;
  // Multiply by (photons + k) / k for k = 1 .. modes-1; keep exact by
  // dividing at every step (the running value is always a binomial).
  for (int k = 1; k <= modes - 1; ++k) {
    const std::uint64_t num = static_cast<std::uint64_t>(photons) + k;
    if (result > UINT64_MAX / num)
      throw ResourceError("basis_dimension: overflow");
    result = result * num / k;
  }
  return result;
}

namespace {

const auto kDescLex = [](const FockState& a, const FockState& b) {
  return a.occ > b.occ;
};

// Binary search when the basis is stored in enumeration order, linear scan
// otherwise (restricted bases may carry a caller-chosen logical order).
std::size_t find_state(const std::vector<FockState>& states,
                       const FockState& s) {
  if (std::is_sorted(states.begin(), states.end(), kDescLex)) {
    auto it = std::lower_bound(states.begin(), states.end(), s, kDescLex);
    if (it != states.end() && it->occ == s.occ)
      return static_cast<std::size_t>(it - states.begin());
    return states.size();
  }
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i].occ == s.occ) return i;
  return states.size();
}

}  // namespace

bool FockBasis::contains(const FockState& s) const {
  return find_state(states, s) < states.size();
}

std::size_t FockBasis::index_of(const FockState& s) const {
  const std::size_t i = find_state(states, s);
  if (i >= states.size())
    throw ConfigError("FockBasis::index_of: state " + s.str() +
                      " not in basis");
  return i;
}

FockBasis enumerate_basis(int photons, int modes, std::uint64_t dim_cap) {
  const std::uint64_t dim = basis_dimension(photons, modes);
  if (dim > dim_cap)
    throw ResourceError("enumerate_basis: dimension " + std::to_string(dim) +
                        " exceeds cap " + std::to_string(dim_cap));
  FockBasis basis;
  basis.photons = photons;
  basis.modes = modes;
  basis.states.reserve(static_cast<std::size_t>(dim));

  std::vector<int> occ(static_cast<std::size_t>(modes), 0);
  occ[0] = photons;
  for (;;) {
    basis.states.push_back(FockState{occ});
    if (photons == 0) break;
    // Successor in descending lexicographic order: move one photon from the
    // last occupied mode one step right; if that mode is already the final
    // one, collapse its photons onto the next-left occupied mode's right
    // neighbour.
    int k = modes - 1;
    while (occ[static_cast<std::size_t>(k)] == 0) --k;
    if (k == modes - 1) {
      int j = modes - 2;
      while (j >= 0 && occ[static_cast<std::size_t>(j)] == 0) --j;
      if (j < 0) break;  // all photons in the last mode: enumeration done
      const int t = occ[static_cast<std::size_t>(modes - 1)];
      occ[static_cast<std::size_t>(modes - 1)] = 0;
      occ[static_cast<std::size_t>(j)] -= 1;
      occ[static_cast<std::size_t>(j + 1)] = t + 1;
    } else {
      occ[static_cast<std::size_t>(k)] -= 1;
      occ[static_cast<std::size_t>(k + 1)] += 1;
    }
  }
  if (basis.states.size() != dim)
    throw ResourceError("enumerate_basis: internal enumeration mismatch");
  return basis;
}

FockBasis restrict_basis(const FockBasis& parent,
                         const std::vector<FockState>& keep,
                         bool allow_empty) {
  std::vector<std::size_t> idx;
  idx.reserve(keep.size());
  for (const FockState& s : keep) idx.push_back(parent.index_of(s));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  if (idx.empty() && !allow_empty)
    throw ConfigError("restrict_basis: empty restriction");
  FockBasis out;
  out.photons = parent.photons;
  out.modes = parent.modes;
  out.states.reserve(idx.size());
  for (std::size_t i : idx) out.states.push_back(parent.states[i]);
  return out;
}

std::vector<int> assignment_of(const FockState& s) {
  std::vector<int> a;
  a.reserve(static_cast<std::size_t>(s.total()));
  for (std::size_t m = 0; m < s.occ.size(); ++m)
    for (int c = 0; c < s.occ[m]; ++c) a.push_back(static_cast<int>(m));
  return a;
}

FockState state_from_assignment(const std::vector<int>& modes_of_photons,
                                int modes) {
  FockState s;
  s.occ.assign(static_cast<std::size_t>(modes), 0);
  for (int m : modes_of_photons) {
    if (m < 0 || m >= modes)
      throw ConfigError("state_from_assignment: mode index out of range");
    s.occ[static_cast<std::size_t>(m)] += 1;
  }
  return s;
}

}  // namespace qfp
