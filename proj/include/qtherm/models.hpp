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
#include <utility>
#include <vector>

#include "qtherm/common.hpp"
#include "qtherm/free_basis.hpp"

namespace qtherm {

enum class ModelKind { kOscillatorChain, kBlbqChain, kSpinHalfChain };

std::string to_string(ModelKind kind);

struct BuildOptions {
  Index max_dim = 20000;
  // Tensor slot of each bath site (sites 2..N), as a permutation of 0..N-2.
  // Empty means the natural order. Only changes the product labelling.
  std::vector<int> bath_slot_order;
};

struct OscillatorParams {
  int n_sites = 4;
  int spin_cutoff = 3;  // positions s = -S..S
  double h_x = 0.7;
  double j = 0.8;
};

struct BlbqParams {
  int n_sites = 4;
  double spin = 3.0;  // integer or half-integer
  double h_z = 1.0;
  double h_x = 0.2;
  double j = 0.8;
  double delta = 0.3;
  double q = 1.5;
};

struct SpinHalfParams {
  int n_sites = 10;
  double b_z_system = 0.8;
  double b_x_system = 0.0;
  double b_z_bath = 0.0;
  double b_x_bath = 0.3;
  double j_z_bath = 0.1;
  double j_x_bath = 1.0;
  double j_z_coupling = 0.2;
  double j_x_coupling = 0.4;
};

/// H = H0 + V expressed in the free basis (product order).
///
/// frame_system / frame_bath hold the free eigenvectors of H_S and H_B as
/// columns in the computational site basis; observables built in the
/// computational basis are rotated with frame_system (x) frame_bath.
struct HamiltonianPair {
  ModelKind kind{};
  std::vector<std::pair<std::string, double>> params;
  FreeBasis basis;
  Vector h0;  // diagonal of H0
  Matrix v;
  Matrix frame_system;
  Matrix frame_bath;
  bool identity_frame = true;
  double spin = 0.0;  // local spin S (spin chains only)
  std::vector<int> bath_slot_order;

  Index dim() const { return h0.size(); }
  Matrix total() const;
  Matrix frame() const;  // frame_system (x) frame_bath
};

HamiltonianPair build_oscillator_chain(const OscillatorParams& p, const BuildOptions& opt = {});
HamiltonianPair build_blbq_chain(const BlbqParams& p, const BuildOptions& opt = {});
HamiltonianPair build_spin_half_chain(const SpinHalfParams& p, const BuildOptions& opt = {});

namespace ops {

// Local operators; basis ordered by ascending quantum number (m = -S..S or s = -S..S).
Matrix spin_z(double spin);
Matrix spin_plus(double spin);
Matrix spin_x(double spin);
// A = (S+ - S-)/2, so S_y = -i A and S_y (x) S_y = -(A (x) A).
Matrix spin_y_imag(double spin);
// T = sum_s |s><s+1| on 2S+1 positions.
Matrix shift_down(int cutoff);

Matrix kron(const Matrix& a, const Matrix& b);

// Embeds site-local factors into the product space. Slots not listed carry
// the identity. Slot 0 is the slowest index.
Matrix embed(const std::vector<Index>& dims, const std::vector<std::pair<int, const Matrix*>>& factors);

// Deterministic sign: the largest-magnitude component of each column is positive.
void fix_column_signs(Matrix& vectors);

}  // namespace ops

}  // namespace qtherm
