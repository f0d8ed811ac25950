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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qtherm/common.hpp"
#include "qtherm/free_basis.hpp"
#include "qtherm/observable.hpp"
#include "qtherm/spectral.hpp"

namespace qtherm {

/// Lorentzian envelope (omega0 Gamma / pi) / ((E - center)^2 + Gamma^2).
struct LorentzianEnvelope {
  double gamma = 1.0;
  double omega0 = 1.0;
  double center = 0.0;

  double operator()(double energy) const;
  void validate() const;
};

struct MicrocanonicalWeights {
  Vector weights;   // per free state, product order; sums to 1
  Vector energies;  // E_alpha, product order
};

// Lorentzian weights of width gamma centered at e_center over the free
// energies, normalized to unit sum.
MicrocanonicalWeights microcanonical_weights(const FreeBasis& basis, double e_center,
                                             double gamma);

double microcanonical_average(const Vector& obs_diagonal, const MicrocanonicalWeights& w);

// p_inf(s) = sum_alpha w_alpha (P_s)_{alpha alpha}, outcomes in the
// observable's ascending order.
Vector stationary_distribution(const Observable& obs, const MicrocanonicalWeights& w);

struct SystemDistribution {
  Vector p_s;
  Vector s_values;     // outcome labels (e.g. positions)
  double beta = 0.0;   // d ln D_B / dE at the initial energy
  double mass = 1.0;   // eps_s = m s^2 / 2
  double window = 0.0; // width of the log-slope fit window
};

using DensityFunction = std::function<double(double)>;

// Fit window for beta: max(4 Gamma, 10 bath level spacings).
double beta_window(double gamma, double bath_spacing);

// p(s) = D_B(E - eps_s) / sum_s D_B(E - eps_s); beta from a linear fit of
// ln D_B over [E - window/2, E + window/2].
SystemDistribution system_distribution(const DensityFunction& bath_dos,
                                       const Vector& system_energies, const Vector& s_values,
                                       double e_alpha0, double window, double mass);
// Same, interpolating a tabulated estimate; refuses energies off its grid.
SystemDistribution system_distribution(const DosEstimate& bath_dos,
                                       const Vector& system_energies, const Vector& s_values,
                                       double e_alpha0, double window, double mass);

struct EinsteinReport {
  double sigma2_from_p = 0.0;
  double sigma2_predicted = 0.0;  // 1 / (m beta), zero when beta <= 0
  double m_beta = 0.0;
  double relative_deviation = 0.0;  // |sigma2 m beta - 1|
  bool flagged = false;         // beta <= 0
  bool outside_regime = false;  // width check below failed
  std::string note;
};

// The regime note fires when the predicted width 1/sqrt(m beta) is below
// one lattice unit or above a quarter of the outcome range.
EinsteinReport einstein_check(const SystemDistribution& dist);

/// K(s_i, s_f) = (delta - p_inf(s_f)) e^{-2 Gamma dt} + p_inf(s_f); rows s_i.
Matrix markov_kernel(const Vector& p_inf, double gamma, double dt);

// max |K(t_f - t_m) K(t_m - t_i) - K(t_f - t_i)|; the first leg uses
// gamma_first, the second and the direct kernel gamma_second.
double chapman_kolmogorov_error(const Vector& p_inf, double gamma_first, double gamma_second,
                                double t_i, double t_m, double t_f);

struct TimeTriple {
  double t_i = 0.0;
  double t_m = 0.0;
  double t_f = 0.0;
};

double chapman_kolmogorov_check(const Vector& p_inf, double gamma,
                                const std::vector<TimeTriple>& triples);

double shannon_entropy(const Vector& p);  // 0 ln 0 = 0

struct EntropyCurve {
  Vector times;
  Vector entropy;
  double min_increment = 0.0;  // smallest finite difference for t > 0
  bool non_decreasing = true;  // min_increment >= -1e-12
};

// S_G(t) along p(t) = e^{-2 Gamma t} p0 + (1 - e^{-2 Gamma t}) p_inf.
EntropyCurve predicted_entropy_curve(const Vector& p0, const Vector& p_inf, double gamma,
                                     const Vector& times);

void check_distribution(const Vector& p, const char* what);

enum class Orthogonalization {
  kPreserveNorms,  // orthogonal rows keeping their drawn Gaussian norms
  kOrthonormal,    // rows additionally scaled to unit norm
};

/// Gaussian coefficients with variance Lambda(mu, alpha), made mutually
/// orthogonal by symmetric (Loewdin) orthogonalization of the block.
class ChaoticEnsemble {
 public:
  // lambda is the full (mu, alpha) envelope; rows [row_begin, row_begin +
  // n_states) are sampled.
  ChaoticEnsemble(Matrix lambda, Index row_begin, Index n_states,
                  Orthogonalization mode = Orthogonalization::kPreserveNorms);

  Matrix sample(std::uint64_t seed, std::uint64_t member) const;

  Index n_states() const { return n_states_; }
  Index row_begin() const { return row_begin_; }
  const Matrix& lambda() const { return lambda_; }
  Orthogonalization mode() const { return mode_; }
  // Envelope the sample statistics should follow: lambda itself, or with
  // rows normalized to unit sum in the orthonormal mode.
  Matrix effective_lambda() const;

 private:
  Matrix lambda_;
  Matrix sqrt_lambda_;
  Index row_begin_;
  Index n_states_;
  Orthogonalization mode_;
};

// Lambda(mu, alpha) on a uniform grid E = k omega0 for both indices.
Matrix lorentzian_envelope_matrix(Index n_grid, double omega0, double gamma);

struct VarianceProfile {
  Vector offsets;    // (E_mu - E_alpha) / omega0, integer steps
  Vector empirical;  // mean c^2 per offset
  Vector std_error;
  Vector predicted;  // effective envelope averaged over the same (mu, alpha)
  std::vector<Index> counts;
};

struct FourPointTuple {
  Index mu = 0;
  Index nu = 0;
  Index alpha = 0;
  Index beta = 0;
  Index alpha_p = 0;
  Index beta_p = 0;
};

struct FourPointResult {
  FourPointTuple tuple;
  double empirical = 0.0;
  double std_error = 0.0;
  double gaussian_term = 0.0;
  double correction_term = 0.0;
  double predicted = 0.0;
  double z_score() const;
};

// Four-point function <c_mu(a) c_nu(b) c_mu(a') c_nu(b')> predicted from
// the envelope: Gaussian pairing plus the orthogonality correction.
FourPointResult predict_four_point(const Matrix& lambda, const FourPointTuple& t);

struct EnsembleSummary {
  Index n_members = 0;
  VarianceProfile variance;
  std::vector<FourPointResult> four_point;
  double max_orthonormality_error = 0.0;
};

// Streams n_members samples (members in parallel over `threads`) and
// accumulates the binned variance for offsets within +/- max_offset plus
// the requested four-point tuples. Indices in tuples are absolute rows/columns.
EnsembleSummary run_chaotic_ensemble(const ChaoticEnsemble& ensemble, Index n_members,
                                     std::uint64_t seed, Index max_offset,
                                     const std::vector<FourPointTuple>& tuples, int threads = 1);

}  // namespace qtherm
