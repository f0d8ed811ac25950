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

#include <string>
#include <vector>

#include "qtherm/common.hpp"
#include "qtherm/models.hpp"

namespace qtherm {

/// Observable with its spectral decomposition into measurement eigenspaces.
///
/// bases[k] has orthonormal columns spanning the eigenspace of outcomes[k],
/// so P_k = bases[k] * bases[k]^T. Everything lives in the free basis.
struct Observable {
  std::string name;
  Matrix matrix;
  std::vector<double> outcomes;  // ascending, distinct
  std::vector<Matrix> bases;
  bool diagonal_in_free_basis = false;
  bool system_local = false;

  Index dim() const { return matrix.rows(); }
  size_t n_outcomes() const { return outcomes.size(); }
  Index rank(size_t k) const { return bases[k].cols(); }
  Matrix projector(size_t k) const { return bases[k] * bases[k].transpose(); }
  double min_value() const { return outcomes.front(); }
  double max_value() const { return outcomes.back(); }
  // Outcome index of a value (exact match within 1e-9), or -1.
  int outcome_index(double value) const;
};

/// Known names: position_site_1, sz_site_1, sigma_z_site_1, sz_global and
/// projector:<k> (projector onto the k-th free system state, 0-based).
Observable build_observable(const HamiltonianPair& model, const std::string& spec);

std::vector<std::string> observable_names(ModelKind kind);

}  // namespace qtherm
