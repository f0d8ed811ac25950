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

#include <optional>
#include <string>
#include <vector>

#include "qtherm/common.hpp"
#include "qtherm/free_basis.hpp"
#include "qtherm/models.hpp"

namespace qtherm {

/// Full eigendecomposition of H in the free basis.
///
/// vectors(p, mu) = c_mu(p) with p the product index; column mu is the
/// eigenstate with energies(mu), energies ascending. Each column has its
/// largest-magnitude component positive.
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(Vector energies, Matrix vectors, FreeBasis basis);

  Index dim() const { return energies_.size(); }
  const Vector& energies() const { return energies_; }
  const Matrix& vectors() const { return vectors_; }
  const FreeBasis& basis() const { return basis_; }
  double max_residual() const { return max_residual_; }
  void set_max_residual(double r) { max_residual_ = r; }

  // c_mu(alpha) with alpha the energy-ordered free label.
  double coefficient(Index mu, Index alpha) const {
    return vectors_(basis_.product_of(alpha), mu);
  }
  double min_energy() const { return energies_(0); }
  double max_energy() const { return energies_(dim() - 1); }

  // Transforms an operator given in the free basis to the eigenbasis.
  Matrix to_eigenbasis(const Matrix& op) const;

 private:
  Vector energies_;
  Matrix vectors_;
  FreeBasis basis_;
  double max_residual_ = 0.0;
};

Spectrum diagonalize(const HamiltonianPair& model);
Spectrum diagonalize(const Matrix& h, const FreeBasis& basis);

// max_mu |H psi_mu - E_mu psi_mu|_inf
double eigen_residual(const Matrix& h, const Spectrum& spectrum);
// max |C^T C - 1|
double orthonormality_error(const Spectrum& spectrum);

/// Gaussian kernel density of a set of levels, evaluated anywhere.
class KernelDensity {
 public:
  KernelDensity(Vector levels, double bandwidth);
  double operator()(double energy) const;
  double bandwidth() const { return bandwidth_; }
  const Vector& levels() const { return levels_; }  // sorted

 private:
  Vector levels_;
  double bandwidth_;
};

struct DosEstimate {
  Vector energy_grid;
  Vector density;
  double bandwidth = 0.0;
  std::optional<Vector> bath_density;
  // max relative deviation of D(E) from sum_s D_B(E - eps_s) over the bulk
  // of the grid, when bath levels were supplied.
  std::optional<double> relation_error;

  double integral() const;  // trapezoid over the grid
};

// 5 x mean level spacing over the central fraction of the sorted levels.
double default_bandwidth(const Vector& levels, double central_fraction = 0.2);

DosEstimate estimate_dos(const Vector& levels, double bandwidth, Index n_grid = 2001);
DosEstimate estimate_dos(const Vector& levels, double bandwidth, const Vector& bath_levels,
                         const Vector& system_energies, Index n_grid = 2001);

// Number of levels in [e - half_width, e + half_width] divided by the width.
double window_count_density(const Vector& levels, double e, double half_width);

struct EnvelopeFit {
  Vector bin_centers;  // E_mu - E_alpha
  Vector lambda_avg;   // mean c_mu(alpha)^2 per bin
  std::vector<Index> counts;
  double omega0 = 0.0;  // local free level spacing
  std::optional<double> gamma;
  double fit_residual = 0.0;  // RMS over bins
  bool flagged = false;
  std::string note;

  // sum_b lambda_b * bin_width / omega0, close to 1 when bins cover the envelope.
  double normalization() const;
};

// Averages c_mu(alpha)^2 over eigenstates mu with E_mu in [e_lo, e_hi],
// binned by E_mu - E_alpha within +/- max_offset, then fits the Lorentzian
// (omega0 Gamma / pi) / (dE^2 + Gamma^2) with omega0 fixed by the local
// free level spacing. max_offset <= 0 uses a tenth of the spectral width.
EnvelopeFit fit_envelope(const Spectrum& spectrum, double e_lo, double e_hi, Index n_bins,
                         double max_offset);

// Central window covering the given fraction of the levels (by rank).
std::pair<double, double> central_window(const Vector& sorted_levels, double fraction);

}  // namespace qtherm
