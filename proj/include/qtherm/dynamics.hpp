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
#include "qtherm/observable.hpp"
#include "qtherm/spectral.hpp"

namespace qtherm {

struct EvolutionSeries {
  Vector times;
  Vector values;
  std::string observable;
  Index initial_state = -1;  // product index of the free initial state, if any
};

// 0 followed by n-1 points log-spaced in [t_min, t_max].
Vector log_time_grid(double t_min, double t_max, Index n);
Vector linear_time_grid(double t_max, Index n);

// Unit vector |phi_p> in the free basis.
Vector free_state(Index dim, Index product);

/// <O(t)> = sum_{mu nu} a_mu a_nu cos((E_mu - E_nu) t) O_{mu nu}, evaluated
/// exactly from the eigendecomposition. o_eig is O in the eigenbasis.
EvolutionSeries evolve_expectation(const Spectrum& spectrum, const Vector& psi0,
                                   const Matrix& o_eig, const Vector& times);
EvolutionSeries evolve_expectation(const Spectrum& spectrum, const Vector& psi0,
                                   const Observable& obs, const Vector& times);

struct DecayFit {
  bool ok = false;
  double gamma = 0.0;      // decay law A exp(-2 Gamma t) + B
  double amplitude = 0.0;  // A
  double o_start = 0.0;    // A + B
  double o_end = 0.0;      // B
  double residual = 0.0;   // RMS over the fitted points
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::string note;
};

// Least squares of A exp(-2 Gamma t) + B over t in [t_lo, t_hi]. Gamma is
// found by a scan plus golden section on log Gamma, (A, B) by linear least
// squares at each trial Gamma.
DecayFit fit_decay(const Vector& t, const Vector& y, double t_lo, double t_hi);
DecayFit fit_decay(const EvolutionSeries& series, double t_lo, double t_hi);

// Window rule: fit the whole series, then stop at the first time after which
// the series stays within `band` of the plateau for one decay time 1/(2 Gamma).
// Returns [t_first, t_end]; falls back to the full range.
std::pair<double, double> default_fit_window(const Vector& t, const Vector& y, double band);
DecayFit fit_decay_auto(const Vector& t, const Vector& y, double band);

// A exp(-2 Gamma t) + b with the offset b given, over [t_lo, t_hi].
DecayFit fit_decay_fixed_offset(const Vector& t, const Vector& y, double offset, double t_lo,
                                double t_hi);

// The offset of a free fit is only identifiable once the window spans this
// many e-folds of exp(-2 Gamma t).
inline constexpr double kMinEfoldsForFreeOffset = 2.0;

struct FluctuationReport {
  double o_infinity = 0.0;
  double sigma2 = 0.0;  // diagonal-ensemble variance of O
  double delta2 = 0.0;  // infinite-time variance of <O(t)>
  double gamma_used = 0.0;
  std::optional<double> dos_inferred;  // sigma2 / (delta2 4 pi Gamma)
  bool flagged = false;
  std::string note;

  double ratio() const { return delta2 > 0.0 ? sigma2 / delta2 : 0.0; }
};

// Levels closer than this are treated as degenerate; their cross terms are
// stationary and count towards the diagonal ensemble.
inline constexpr double kDegenerateGap = 1e-10;

FluctuationReport equilibrium_fluctuations(const Spectrum& spectrum, const Vector& psi0,
                                           const Matrix& o_eig, double gamma);
FluctuationReport equilibrium_fluctuations(const Spectrum& spectrum, const Vector& psi0,
                                           const Observable& obs, double gamma);

double dos_from_fluctuations(double sigma2, double delta2, double gamma);

// Free state with <O> = max(O) whose energy is closest to the median free
// energy; ties by product index. When O is not diagonal in the free basis,
// max(O) is replaced by the largest diagonal element.
Index select_mid_spectrum_max(const FreeBasis& basis, const Observable& obs);

// Up to n_states free states with <O> = max(O) and energy inside the central
// half of [e_min, e_max], spread evenly over that candidate list by energy.
std::vector<Index> select_central_half_max(const FreeBasis& basis, const Observable& obs,
                                           double e_min, double e_max, Index n_states);

struct DosExperimentOptions {
  Vector times;              // evolution grid; empty picks log grid [1e-2, 200]
  double bandwidth = 0.0;    // exact-DOS kernel width; <= 0 picks the default
  double band_factor = 2.0;  // fit window band = band_factor * sqrt(delta2)
};

struct DosRow {
  Index state = 0;  // product index
  double energy = 0.0;
  double gamma = 0.0;
  double sigma2 = 0.0;
  double delta2 = 0.0;
  double dos_inferred = 0.0;
  double dos_exact = 0.0;
  bool ok = false;
  std::string note;
};

std::vector<DosRow> measure_dos_experiment(const Spectrum& spectrum, const Observable& obs,
                                           const std::vector<Index>& states,
                                           const DosExperimentOptions& opt = {});

}  // namespace qtherm
