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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qtherm/common.hpp"
#include "qtherm/dynamics.hpp"
#include "qtherm/observable.hpp"
#include "qtherm/spectral.hpp"

namespace qtherm {

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::vector<int> outcome_index;  // s_0 .. s_{n_meas}, index into obs.outcomes
  Vector outcomes;                 // the corresponding values
  Vector energies;                 // <H> after each collapse (E_0: initial state)
  double max_probability_defect = 0.0;  // max |sum_k p_k - 1| before sampling
};

/// Exact propagation between projective measurements of an observable.
///
/// States are stored in measurement coordinates y = Q^T psi, where the
/// columns of Q are the observable's eigenspace bases stacked by ascending
/// outcome. The propagator U(dt) = B^T diag(exp(-i E dt)) B with B = V^T Q
/// is formed once per dt.
class TrajectoryEngine {
 public:
  TrajectoryEngine(const Spectrum& spectrum, const Observable& obs);

  void set_dt(double dt);
  double dt() const { return dt_; }
  Index dim() const { return dim_; }
  size_t n_outcomes() const { return offsets_.size() - 1; }
  const std::vector<double>& outcome_values() const { return values_; }

  // Measurement coordinates of a free-basis state.
  CVector to_measurement(const Vector& psi) const;

  // n_real trajectories with seeds derive_seed(base_seed, first_index + i).
  std::vector<TrajectoryRecord> run(const Vector& psi0, Index n_meas, Index n_real,
                                    std::uint64_t base_seed, int threads = 1,
                                    Index first_index = 0) const;
  // One trajectory driven directly by `seed`.
  TrajectoryRecord run_single(const Vector& psi0, Index n_meas, std::uint64_t seed) const;

 private:
  struct Walker;
  void advance(std::vector<Walker>& walkers, Index step) const;
  Walker start(const Vector& psi0, std::uint64_t seed, Index n_meas) const;
  double block_energy(const CVector& x, size_t block) const;

  Index dim_ = 0;
  double dt_ = -1.0;
  Vector energies_;
  Matrix q_;  // eigenspace bases of the observable, stacked
  Matrix b_;  // V^T Q
  std::vector<Index> offsets_;
  std::vector<double> values_;
  std::vector<Matrix> h_blocks_;  // Q_k^T H Q_k
  CMatrix u_;
};

TrajectoryRecord run_trajectory(const Spectrum& spectrum, const Vector& psi0,
                                const Observable& obs, double dt, Index n_meas,
                                std::uint64_t seed);

struct EnsembleOptions {
  double fit_band = -1.0;         // window band for the Gamma_QJ fit; < 0 uses 2 * mean SE
  double discard_time = 0.0;      // transient skipped for the single-trajectory entropy
  // Equilibrium value of the observable. When the record is too short for a
  // free offset (fewer than kMinEfoldsForFreeOffset e-folds) the fit holds
  // the offset at this value instead.
  std::optional<double> equilibrium;
};

struct EnsembleStats {
  double dt = 0.0;
  Index n_real = 0;
  Vector times;                 // j dt, j = 0..n_meas
  Vector mean;                  // <s_j>
  Vector std_error;
  Matrix empirical_p;           // (time, outcome)
  Vector entropy;               // S_G(t_j), plug-in
  Vector entropy_se;            // delta-method standard error
  DecayFit fit;                 // A exp(-2 Gamma_QJ t) + B on the mean trajectory
  std::optional<double> gamma_qj;
  Vector energy_mean;
  Vector energy_sigma;          // across realizations
  double energy_range = 0.0;    // E_max - E_min of the spectrum
  double sigma_e_over_range = 0.0;  // time average of energy_sigma / energy_range, j >= 1
  double delta_e = 0.0;         // std over time of energy_mean, j >= 1
  Matrix transition_counts;     // (s_j, s_{j+1}) pooled over j and realizations
  double max_probability_defect = 0.0;
  std::string note;
};

EnsembleStats summarize_ensemble(const std::vector<TrajectoryRecord>& records,
                                 const std::vector<double>& outcome_values, double energy_range,
                                 const EnsembleOptions& opt = {});

// Plug-in entropy of the outcome histogram of one record, skipping
// outcomes with t_j < discard_time.
double single_trajectory_entropy(const TrajectoryRecord& record, size_t n_outcomes,
                                 double discard_time);

struct EntropyVerdict {
  bool non_decreasing = true;  // every later step >= previous - n_se * combined SE
  double worst_drop_in_se = 0.0;
  double plateau = 0.0;        // mean entropy over the last third of the times
  double saturation_error = 0.0;  // |plateau / single - 1|
};

EntropyVerdict entropy_verdict(const EnsembleStats& stats, double single_entropy,
                               double n_se = 2.0);

struct KernelComparison {
  Matrix empirical;   // row-normalized counts
  Matrix predicted;
  Matrix z;           // (empirical - predicted) / multinomial SE
  Vector row_counts;
  double max_abs_z = 0.0;
};

KernelComparison compare_transitions(const Matrix& counts, const Matrix& kernel);

struct HistoriesReport {
  Vector times;
  Vector measured;    // ensemble mean outcome
  Vector std_error;
  Vector unmeasured;  // <O(t_j)> without monitoring
  Vector z;
  double max_abs_z = 0.0;
};

// The unmeasured series must be sampled at the ensemble's times.
HistoriesReport consistent_histories_check(const EnsembleStats& stats,
                                           const EvolutionSeries& unmeasured);

struct EnergyDriftReport {
  Vector times;
  Vector sigma;  // sigma_E(t_j)
  double energy_range = 0.0;
  double mean_sigma_over_range = 0.0;
  double delta_e = 0.0;
};

EnergyDriftReport energy_drift_report(const std::vector<TrajectoryRecord>& records,
                                      double energy_range);

// Classical chain sampled from the kernel (s_i -> s_f) directly; outcome
// values default to the indices.
std::vector<TrajectoryRecord> simulate_classical_chain(const Vector& p_inf, double gamma,
                                                       double dt, int s0, Index n_steps,
                                                       Index n_real, std::uint64_t base_seed,
                                                       const std::vector<double>& values = {});

}  // namespace qtherm
