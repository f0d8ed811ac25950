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

#include "qtherm/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qtherm/rng.hpp"

namespace qtherm {

double LorentzianEnvelope::operator()(double energy) const {
  const double x = energy - center;
  return omega0 * gamma / std::numbers::pi / (x * x + gamma * gamma);
}

void LorentzianEnvelope::validate() const {
  require(gamma > 0.0, "envelope width must be positive");
  require(omega0 > 0.0, "level spacing must be positive");
}

MicrocanonicalWeights microcanonical_weights(const FreeBasis& basis, double e_center,
                                             double gamma) {
  require(gamma > 0.0, "microcanonical width must be positive");
  MicrocanonicalWeights out;
  out.energies = basis.energies();
  out.weights.resize(out.energies.size());
  for (Index p = 0; p < out.energies.size(); ++p) {
    const double x = out.energies(p) - e_center;
    out.weights(p) = gamma / (x * x + gamma * gamma);
  }
  out.weights /= out.weights.sum();
  return out;
}

double microcanonical_average(const Vector& obs_diagonal, const MicrocanonicalWeights& w) {
  require(obs_diagonal.size() == w.weights.size(), "observable and weights differ in length");
  return obs_diagonal.dot(w.weights);
}

Vector stationary_distribution(const Observable& obs, const MicrocanonicalWeights& w) {
  require(obs.matrix.rows() == w.weights.size(), "observable and weights differ in dimension");
  Vector p(static_cast<Index>(obs.n_outcomes()));
  for (size_t k = 0; k < obs.n_outcomes(); ++k) {
    const Matrix& q = obs.bases[k];
    // (P_k)_{pp} = |row p of Q_k|^2
    p(static_cast<Index>(k)) = q.rowwise().squaredNorm().dot(w.weights);
  }
  return p;
}

double beta_window(double gamma, double bath_spacing) {
  return std::max(4.0 * gamma, 10.0 * bath_spacing);
}

SystemDistribution system_distribution(const DensityFunction& bath_dos,
                                       const Vector& system_energies, const Vector& s_values,
                                       double e_alpha0, double window, double mass) {
  require(system_energies.size() == s_values.size() && system_energies.size() > 0,
          "system energies and outcome labels differ in length");
  require(window > 0.0, "beta window must be positive");
  auto density = [&](double e) {
    const double d = bath_dos(e);
    if (!std::isfinite(d) || d <= 0.0) {
      std::ostringstream os;
      os << "bath density of states unavailable at E = " << e;
      throw DomainError(os.str());
    }
    return d;
  };
  SystemDistribution out;
  out.s_values = s_values;
  out.mass = mass;
  out.window = window;
  out.p_s.resize(system_energies.size());
  for (Index s = 0; s < system_energies.size(); ++s) {
    out.p_s(s) = density(e_alpha0 - system_energies(s));
  }
  out.p_s /= out.p_s.sum();

  constexpr int kPoints = 41;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < kPoints; ++i) {
    const double x = window * (static_cast<double>(i) / (kPoints - 1) - 0.5);
    const double y = std::log(density(e_alpha0 + x));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.beta = (kPoints * sxy - sx * sy) / (kPoints * sxx - sx * sx);
  return out;
}

SystemDistribution system_distribution(const DosEstimate& bath_dos,
                                       const Vector& system_energies, const Vector& s_values,
                                       double e_alpha0, double window, double mass) {
  const Vector& g = bath_dos.energy_grid;
  const Vector& d = bath_dos.density;
  require(g.size() >= 2 && g.size() == d.size(), "bath DOS estimate is empty");
  auto interp = [&](double e) {
    if (e < g(0) || e > g(g.size() - 1)) return std::numeric_limits<double>::quiet_NaN();
    const double* it = std::upper_bound(g.data(), g.data() + g.size(), e);
    Index hi = std::min<Index>(g.size() - 1, static_cast<Index>(it - g.data()));
    Index lo = std::max<Index>(0, hi - 1);
    if (hi == lo) return d(lo);
    const double f = (e - g(lo)) / (g(hi) - g(lo));
    return (1.0 - f) * d(lo) + f * d(hi);
  };
  return system_distribution(DensityFunction(interp), system_energies, s_values, e_alpha0, window,
                             mass);
}

EinsteinReport einstein_check(const SystemDistribution& dist) {
  check_distribution(dist.p_s, "p(s)");
  EinsteinReport out;
  const double mean = dist.p_s.dot(dist.s_values);
  out.sigma2_from_p = dist.p_s.dot(dist.s_values.cwiseAbs2()) - mean * mean;
  out.m_beta = dist.mass * dist.beta;
  if (out.m_beta <= 0.0) {
    out.flagged = true;
    out.outside_regime = true;
    out.relative_deviation = std::numeric_limits<double>::infinity();
    out.note = "non-positive temperature; relation does not apply";
    return out;
  }
  out.sigma2_predicted = 1.0 / out.m_beta;
  out.relative_deviation = std::abs(out.sigma2_from_p * out.m_beta - 1.0);
  const double width = std::sqrt(out.sigma2_predicted);
  const double range = dist.s_values.maxCoeff() - dist.s_values.minCoeff();
  if (width < 1.0 || width > 0.25 * range) {
    out.outside_regime = true;
    out.note = "predicted width outside [1, range/4]; continuum approximation is poor";
  }
  return out;
}

void check_distribution(const Vector& p, const char* what) {
  require(p.size() > 0, std::string(what) + " is empty");
  require(p.minCoeff() >= -1e-15, std::string(what) + " has negative entries");
  require(std::abs(p.sum() - 1.0) < 1e-9, std::string(what) + " does not sum to one");
}

Matrix markov_kernel(const Vector& p_inf, double gamma, double dt) {
  check_distribution(p_inf, "p_inf");
  require(gamma > 0.0, "kernel decay rate must be positive");
  require(dt >= 0.0, "kernel time step must be non-negative");
  const double e = std::exp(-2.0 * gamma * dt);
  const Index d = p_inf.size();
  Matrix k(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index f = 0; f < d; ++f) {
      k(i, f) = ((i == f ? 1.0 : 0.0) - p_inf(f)) * e + p_inf(f);
    }
  }
  return k;
}

double chapman_kolmogorov_error(const Vector& p_inf, double gamma_first, double gamma_second,
                                double t_i, double t_m, double t_f) {
  require(t_i <= t_m && t_m <= t_f, "time triple must be ordered");
  const Matrix first = markov_kernel(p_inf, gamma_first, t_m - t_i);
  const Matrix second = markov_kernel(p_inf, gamma_second, t_f - t_m);
  const Matrix direct = markov_kernel(p_inf, gamma_second, t_f - t_i);
  return (first * second - direct).cwiseAbs().maxCoeff();
}

double chapman_kolmogorov_check(const Vector& p_inf, double gamma,
                                const std::vector<TimeTriple>& triples) {
  double worst = 0.0;
  for (const auto& t : triples) {
    worst = std::max(worst, chapman_kolmogorov_error(p_inf, gamma, gamma, t.t_i, t.t_m, t.t_f));
  }
  return worst;
}

double shannon_entropy(const Vector& p) {
  double s = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) s -= p(i) * std::log(p(i));
  }
  return s;
}

EntropyCurve predicted_entropy_curve(const Vector& p0, const Vector& p_inf, double gamma,
                                     const Vector& times) {
  check_distribution(p0, "p0");
  check_distribution(p_inf, "p_inf");
  require(p0.size() == p_inf.size(), "p0 and p_inf differ in length");
  require(gamma > 0.0, "decay rate must be positive");
  EntropyCurve out;
  out.times = times;
  out.entropy.resize(times.size());
  for (Index k = 0; k < times.size(); ++k) {
    const double e = std::exp(-2.0 * gamma * times(k));
    out.entropy(k) = shannon_entropy(e * p0 + (1.0 - e) * p_inf);
  }
  out.min_increment = std::numeric_limits<double>::infinity();
  for (Index k = 1; k < times.size(); ++k) {
    out.min_increment = std::min(out.min_increment, out.entropy(k) - out.entropy(k - 1));
  }
  if (times.size() < 2) out.min_increment = 0.0;
  out.non_decreasing = out.min_increment >= -1e-12;
  return out;
}

ChaoticEnsemble::ChaoticEnsemble(Matrix lambda, Index row_begin, Index n_states,
                                 Orthogonalization mode)
    : lambda_(std::move(lambda)), row_begin_(row_begin), n_states_(n_states), mode_(mode) {
  require(lambda_.size() > 0 && lambda_.minCoeff() >= 0.0, "envelope must be non-negative");
  require(n_states_ >= 1, "need at least one sampled state");
  require(n_states_ <= lambda_.cols(), "more sampled states than grid dimension");
  require(row_begin_ >= 0 && row_begin_ + n_states_ <= lambda_.rows(),
          "sampled rows outside the envelope grid");
  for (Index r = row_begin_; r < row_begin_ + n_states_; ++r) {
    require(lambda_.row(r).sum() > 0.0, "envelope row is not normalizable");
  }
  sqrt_lambda_ = lambda_.cwiseSqrt();
}

Matrix ChaoticEnsemble::sample(std::uint64_t seed, std::uint64_t member) const {
  Rng rng = make_rng(seed, member);
  NormalSampler normal;
  const Index n = lambda_.cols();
  Matrix g(n_states_, n);
  for (Index i = 0; i < n_states_; ++i) {
    for (Index a = 0; a < n; ++a) g(i, a) = sqrt_lambda_(row_begin_ + i, a) * normal(rng);
  }
  // Symmetric orthogonalization of the unit-normalized rows, then each row
  // gets its drawn Gaussian norm back: only orthogonality is imposed.
  const Vector norms = g.rowwise().norm();
  if (norms.minCoeff() <= 0.0) throw NumericError("sampled row vanished");
  const Matrix u = norms.cwiseInverse().asDiagonal() * g;
  const Matrix s = u * u.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
    throw NumericError("sampled block is rank deficient");
  }
  const Vector inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
  const Matrix s_inv_half = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
  if (mode_ == Orthogonalization::kOrthonormal) return s_inv_half * u;
  return norms.asDiagonal() * (s_inv_half * u);
}

Matrix ChaoticEnsemble::effective_lambda() const {
  Matrix out = lambda_;
  if (mode_ == Orthogonalization::kOrthonormal) {
    for (Index r = 0; r < out.rows(); ++r) {
      const double s = out.row(r).sum();
      if (s > 0.0) out.row(r) /= s;
    }
  }
  return out;
}

Matrix lorentzian_envelope_matrix(Index n_grid, double omega0, double gamma) {
  LorentzianEnvelope env{gamma, omega0, 0.0};
  env.validate();
  Matrix out(n_grid, n_grid);
  for (Index a = 0; a < n_grid; ++a) {
    for (Index m = 0; m < n_grid; ++m) out(m, a) = env(static_cast<double>(m - a) * omega0);
  }
  return out;
}

double FourPointResult::z_score() const {
  const double diff = empirical - predicted;
  if (std_error <= 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / std_error;
}

FourPointResult predict_four_point(const Matrix& lambda, const FourPointTuple& t) {
  auto d = [](Index x, Index y) { return x == y ? 1.0 : 0.0; };
  FourPointResult out;
  out.tuple = t;
  const double la = lambda(t.mu, t.alpha);
  const double lb = lambda(t.nu, t.beta);
  const double lap = lambda(t.mu, t.alpha_p);
  const double lbp = lambda(t.nu, t.beta_p);
  if (t.mu == t.nu) {
    // all four factors from one row: plain Wick pairing
    out.gaussian_term = la * lb * d(t.alpha, t.alpha_p) * d(t.beta, t.beta_p) +
                        la * lap * d(t.alpha, t.beta) * d(t.alpha_p, t.beta_p) +
                        la * lb * d(t.alpha, t.beta_p) * d(t.beta, t.alpha_p);
    out.correction_term = 0.0;
  } else {
    out.gaussian_term = la * lb * d(t.alpha, t.alpha_p) * d(t.beta, t.beta_p);
    const double overlap = lambda.row(t.mu).dot(lambda.row(t.nu));
    out.correction_term = -la * lb * lap * lbp / overlap *
                          (d(t.alpha, t.beta) * d(t.alpha_p, t.beta_p) +
                           d(t.alpha, t.beta_p) * d(t.beta, t.alpha_p));
  }
  out.predicted = out.gaussian_term + out.correction_term;
  return out;
}

namespace {

struct ChunkAccumulator {
  Vector sum_c2;
  Vector sum_c4;
  std::vector<Index> count;
  Vector tuple_sum;
  Vector tuple_sum2;
  double max_orth = 0.0;
};

}  // namespace

EnsembleSummary run_chaotic_ensemble(const ChaoticEnsemble& ensemble, Index n_members,
                                     std::uint64_t seed, Index max_offset,
                                     const std::vector<FourPointTuple>& tuples, int threads) {
  require(n_members >= 1, "need at least one ensemble member");
  require(max_offset >= 0, "offset range must be non-negative");
  const Index r0 = ensemble.row_begin();
  const Index nr = ensemble.n_states();
  const Index n = ensemble.lambda().cols();
  for (const auto& t : tuples) {
    for (Index row : {t.mu, t.nu}) {
      require(row >= r0 && row < r0 + nr, "four-point row outside the sampled block");
    }
    for (Index col : {t.alpha, t.beta, t.alpha_p, t.beta_p}) {
      require(col >= 0 && col < n, "four-point column outside the grid");
    }
  }
  const Index n_bins = 2 * max_offset + 1;
  const Index n_tuples = static_cast<Index>(tuples.size());
  constexpr Index kChunk = 32;
  const Index n_chunks = (n_members + kChunk - 1) / kChunk;
  std::vector<ChunkAccumulator> acc(static_cast<size_t>(n_chunks));

  parallel_chunks(n_chunks, threads, [&](std::int64_t chunk) {
    ChunkAccumulator& a = acc[static_cast<size_t>(chunk)];
    a.sum_c2 = Vector::Zero(n_bins);
    a.sum_c4 = Vector::Zero(n_bins);
    a.count.assign(static_cast<size_t>(n_bins), 0);
    a.tuple_sum = Vector::Zero(n_tuples);
    a.tuple_sum2 = Vector::Zero(n_tuples);
    const Index end = std::min(n_members, (chunk + 1) * kChunk);
    for (Index m = chunk * kChunk; m < end; ++m) {
      const Matrix c = ensemble.sample(seed, static_cast<std::uint64_t>(m));
      Matrix gram = c * c.transpose();
      gram.diagonal().setZero();
      a.max_orth = std::max(a.max_orth, gram.cwiseAbs().maxCoeff());
      for (Index i = 0; i < nr; ++i) {
        const Index mu = r0 + i;
        const Index lo = std::max<Index>(0, mu - max_offset);
        const Index hi = std::min<Index>(n - 1, mu + max_offset);
        for (Index al = lo; al <= hi; ++al) {
          const Index b = mu - al + max_offset;
          const double x = c(i, al) * c(i, al);
          a.sum_c2(b) += x;
          a.sum_c4(b) += x * x;
          ++a.count[static_cast<size_t>(b)];
        }
      }
      for (Index k = 0; k < n_tuples; ++k) {
        const auto& t = tuples[static_cast<size_t>(k)];
        const double v = c(t.mu - r0, t.alpha) * c(t.nu - r0, t.beta) * c(t.mu - r0, t.alpha_p) *
                         c(t.nu - r0, t.beta_p);
        a.tuple_sum(k) += v;
        a.tuple_sum2(k) += v * v;
      }
    }
  });

  Vector sum_c2 = Vector::Zero(n_bins);
  Vector sum_c4 = Vector::Zero(n_bins);
  std::vector<Index> count(static_cast<size_t>(n_bins), 0);
  Vector tsum = Vector::Zero(n_tuples);
  Vector tsum2 = Vector::Zero(n_tuples);
  EnsembleSummary out;
  out.n_members = n_members;
  for (const auto& a : acc) {
    sum_c2 += a.sum_c2;
    sum_c4 += a.sum_c4;
    for (Index b = 0; b < n_bins; ++b) count[static_cast<size_t>(b)] += a.count[static_cast<size_t>(b)];
    tsum += a.tuple_sum;
    tsum2 += a.tuple_sum2;
    out.max_orthonormality_error = std::max(out.max_orthonormality_error, a.max_orth);
  }

  const Matrix lam_norm = ensemble.effective_lambda();

  VarianceProfile& vp = out.variance;
  vp.offsets.resize(n_bins);
  vp.empirical.resize(n_bins);
  vp.std_error.resize(n_bins);
  vp.predicted = Vector::Zero(n_bins);
  vp.counts = count;
  std::vector<Index> pred_count(static_cast<size_t>(n_bins), 0);
  for (Index i = 0; i < nr; ++i) {
    const Index mu = r0 + i;
    for (Index al = std::max<Index>(0, mu - max_offset); al <= std::min<Index>(n - 1, mu + max_offset); ++al) {
      const Index b = mu - al + max_offset;
      vp.predicted(b) += lam_norm(mu, al);
      ++pred_count[static_cast<size_t>(b)];
    }
  }
  for (Index b = 0; b < n_bins; ++b) {
    const Index off = b - max_offset;
    vp.offsets(b) = static_cast<double>(off);
    const double cnt = static_cast<double>(count[static_cast<size_t>(b)]);
    if (cnt > 0) {
      const double mean = sum_c2(b) / cnt;
      const double var = std::max(0.0, sum_c4(b) / cnt - mean * mean);
      vp.empirical(b) = mean;
      vp.std_error(b) = std::sqrt(var / cnt);
      vp.predicted(b) /= static_cast<double>(pred_count[static_cast<size_t>(b)]);
    } else {
      vp.empirical(b) = vp.std_error(b) = 0.0;
    }
  }

  const double nm = static_cast<double>(n_members);
  for (Index k = 0; k < n_tuples; ++k) {
    FourPointResult r = predict_four_point(lam_norm, tuples[static_cast<size_t>(k)]);
    r.empirical = tsum(k) / nm;
    const double var = std::max(0.0, tsum2(k) / nm - r.empirical * r.empirical);
    r.std_error = std::sqrt(var / nm);
    out.four_point.push_back(r);
  }
  return out;
}

}  // namespace qtherm
