// Copyright 2026 The qtherm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qtherm/free_basis.hpp"

#include <algorithm>
#include <numeric>

namespace qtherm {

FreeBasis::FreeBasis(std::vector<Index> site_dims, Vector system_energies,
                     Vector bath_energies)
    : site_dims_(std::move(site_dims)),
      system_energies_(std::move(system_energies)),
      bath_energies_(std::move(bath_energies)) {
  require(system_energies_.size() > 0 && bath_energies_.size() > 0,
          "free basis needs non-empty system and bath factors");
  const Index d = dim();
  energies_.resize(d);
  for (Index s = 0; s < system_dim(); ++s) {
    for (Index b = 0; b < bath_dim(); ++b) {
      energies_(product_index(s, b)) = system_energies_(s) + bath_energies_(b);
    }
  }
  by_energy_.resize(static_cast<size_t>(d));
  std::iota(by_energy_.begin(), by_energy_.end(), Index{0});
  std::stable_sort(by_energy_.begin(), by_energy_.end(),
                   [&](Index a, Index b) { return energies_(a) < energies_(b); });
  rank_.resize(static_cast<size_t>(d));
  for (Index alpha = 0; alpha < d; ++alpha) {
    rank_[static_cast<size_t>(by_energy_[static_cast<size_t>(alpha)])] = alpha;
  }
}

Vector FreeBasis::sorted_energies() const {
  Vector out(dim());
  for (Index alpha = 0; alpha < dim(); ++alpha) out(alpha) = energies_(product_of(alpha));
  return out;
}

}  // namespace qtherm
