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

#pragma once

#include <vector>

#include "qtherm/common.hpp"

namespace qtherm {

/// Product eigenbasis of the uncoupled Hamiltonian H0 = H_S + H_B.
///
/// States are stored in lexicographic product order, p = s * d_B + beta, with
/// the system factor slowest. The energy-ordered label alpha is a stable sort
/// of the free energies; ties keep product order. Both maps are kept because
/// measurements need the product structure while envelope and microcanonical
/// averages need the energy order.
class FreeBasis {
 public:
  FreeBasis() = default;
  FreeBasis(std::vector<Index> site_dims, Vector system_energies, Vector bath_energies);

  const std::vector<Index>& site_dims() const { return site_dims_; }
  Index dim() const { return system_dim() * bath_dim(); }
  Index system_dim() const { return system_energies_.size(); }
  Index bath_dim() const { return bath_energies_.size(); }

  const Vector& system_energies() const { return system_energies_; }
  const Vector& bath_energies() const { return bath_energies_; }

  // Free energies in product order.
  const Vector& energies() const { return energies_; }
  // Free energies in energy order (non-decreasing).
  Vector sorted_energies() const;

  Index system_label(Index product) const { return product / bath_dim(); }
  Index bath_label(Index product) const { return product % bath_dim(); }
  Index product_index(Index s, Index beta) const { return s * bath_dim() + beta; }

  // alpha (energy rank) -> product index and back.
  Index product_of(Index alpha) const { return by_energy_[static_cast<size_t>(alpha)]; }
  Index alpha_of(Index product) const { return rank_[static_cast<size_t>(product)]; }

 private:
  std::vector<Index> site_dims_;
  Vector system_energies_;
  Vector bath_energies_;
  Vector energies_;
  std::vector<Index> by_energy_;
  std::vector<Index> rank_;
};

}  // namespace qtherm
