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

#include "qtherm/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qtherm/rmt.hpp"
#include "qtherm/rng.hpp"

namespace qtherm {

namespace {

constexpr Index kTrajectoryChunk = 128;
constexpr double kMaxProbabilityDefect = 1e-8;

int sample_index(const Vector& weights, double total, Rng& rng) {
  const double u = NormalSampler::uniform(rng) * total;
  double acc = 0.0;
  const Index n = weights.size();
  for (Index k = 0; k < n; ++k) {
    acc += weights(k);
    if (u < acc) return static_cast<int>(k);
  }
  // u landed on the rounding gap at the top; take the last populated outcome
  for (Index k = n - 1; k >= 0; --k) {
    if (weights(k) > 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(n - 1);
}

}  // namespace

struct TrajectoryEngine::Walker {
  Rng rng;
  int block = 0;
  CVector x;
  TrajectoryRecord rec;
};

TrajectoryEngine::TrajectoryEngine(const Spectrum& spectrum, const Observable& obs) {
  dim_ = spectrum.dim();
  require(obs.dim() == dim_, "observable and spectrum differ in dimension");
  require(obs.n_outcomes() >= 1, "observable has no outcomes");
  energies_ = spectrum.energies();
  offsets_.push_back(0);
  for (size_t k = 0; k < obs.n_outcomes(); ++k) offsets_.push_back(offsets_.back() + obs.rank(k));
  require(offsets_.back() == dim_, "observable eigenspaces do not span the state space");
  values_ = obs.outcomes;
  q_.resize(dim_, dim_);
  for (size_t k = 0; k < obs.n_outcomes(); ++k) {
    q_.middleCols(offsets_[k], obs.rank(k)) = obs.bases[k];
  }
  b_ = spectrum.vectors().transpose() * q_;
  for (size_t k = 0; k < obs.n_outcomes(); ++k) {
    const auto bk = b_.middleCols(offsets_[k], obs.rank(k));
    Matrix hk = bk.transpose() * energies_.asDiagonal() * bk;
    h_blocks_.push_back(0.5 * (hk + hk.transpose()));
  }
}

void TrajectoryEngine::set_dt(double dt) {
  require(dt > 0.0, "measurement interval must be positive");
  if (dt == dt_) return;
  dt_ = dt;
  const Vector c = (energies_ * dt).array().cos();
  const Vector s = (energies_ * dt).array().sin();
  const Matrix re = b_.transpose() * c.asDiagonal() * b_;
  const Matrix im = b_.transpose() * s.asDiagonal() * b_;
  u_.resize(dim_, dim_);
  u_.real() = re;
  u_.imag() = -im;
}

CVector TrajectoryEngine::to_measurement(const Vector& psi) const {
  require(psi.size() == dim_, "state dimension mismatch");
  return (q_.transpose() * psi).cast<Complex>();
}

double TrajectoryEngine::block_energy(const CVector& x, size_t block) const {
  const Matrix& h = h_blocks_[block];
  const Vector xr = x.real();
  const Vector xi = x.imag();
  return xr.dot(h * xr) + xi.dot(h * xi);
}

TrajectoryEngine::Walker TrajectoryEngine::start(const Vector& psi0, std::uint64_t seed,
                                                 Index n_meas) const {
  require(std::abs(psi0.norm() - 1.0) < 1e-10, "initial state is not normalized");
  Walker w{Rng(seed), 0, {}, {}};
  w.rec.seed = seed;
  w.rec.dt = dt_;
  w.rec.outcome_index.reserve(static_cast<size_t>(n_meas + 1));
  w.rec.energies.resize(n_meas + 1);
  w.rec.outcomes.resize(n_meas + 1);
  const CVector y = to_measurement(psi0);
  const size_t nk = n_outcomes();
  Vector p(static_cast<Index>(nk));
  for (size_t k = 0; k < nk; ++k) {
    p(static_cast<Index>(k)) = y.segment(offsets_[k], offsets_[k + 1] - offsets_[k]).squaredNorm();
  }
  Index populated = 0;
  for (Index k = 0; k < p.size(); ++k) populated += p(k) > 1e-24 ? 1 : 0;
  // A state inside one eigenspace needs no initial measurement.
  const int k0 = populated == 1 ? static_cast<int>(std::max_element(p.data(), p.data() + p.size()) - p.data())
                                : sample_index(p, p.sum(), w.rng);
  const Index r = offsets_[static_cast<size_t>(k0) + 1] - offsets_[static_cast<size_t>(k0)];
  w.block = k0;
  w.x = y.segment(offsets_[static_cast<size_t>(k0)], r) / std::sqrt(p(k0));
  w.rec.outcome_index.push_back(k0);
  w.rec.outcomes(0) = values_[static_cast<size_t>(k0)];
  w.rec.energies(0) = block_energy(w.x, static_cast<size_t>(k0));
  return w;
}

void TrajectoryEngine::advance(std::vector<Walker>& walkers, Index step) const {
  const size_t nk = n_outcomes();
  std::vector<std::vector<size_t>> groups(nk);
  for (size_t i = 0; i < walkers.size(); ++i) groups[static_cast<size_t>(walkers[i].block)].push_back(i);
  Vector p(static_cast<Index>(nk));
  for (size_t s = 0; s < nk; ++s) {
    const auto& g = groups[s];
    if (g.empty()) continue;
    const Index r = offsets_[s + 1] - offsets_[s];
    CMatrix x(r, static_cast<Index>(g.size()));
    for (size_t j = 0; j < g.size(); ++j) x.col(static_cast<Index>(j)) = walkers[g[j]].x;
    const CMatrix y = u_.middleCols(offsets_[s], r) * x;
    for (size_t j = 0; j < g.size(); ++j) {
      Walker& w = walkers[g[j]];
      const auto col = y.col(static_cast<Index>(j));
      for (size_t k = 0; k < nk; ++k) {
        p(static_cast<Index>(k)) = col.segment(offsets_[k], offsets_[k + 1] - offsets_[k]).squaredNorm();
      }
      const double total = p.sum();
      if (!(total > 1e-14)) {
        std::ostringstream os;
        os << "outcome probabilities vanished at step " << step << " (seed " << w.rec.seed << ")";
        throw NumericError(os.str());
      }
      w.rec.max_probability_defect = std::max(w.rec.max_probability_defect, std::abs(total - 1.0));
      if (std::abs(total - 1.0) > kMaxProbabilityDefect) {
        std::ostringstream os;
        os << "outcome probabilities sum to " << total << " at step " << step;
        throw NumericError(os.str());
      }
      const int k = sample_index(p, total, w.rng);
      const size_t ku = static_cast<size_t>(k);
      w.block = k;
      w.x = col.segment(offsets_[ku], offsets_[ku + 1] - offsets_[ku]) / std::sqrt(p(k));
      w.rec.outcome_index.push_back(k);
      w.rec.outcomes(step) = values_[ku];
      w.rec.energies(step) = block_energy(w.x, ku);
    }
  }
}

std::vector<TrajectoryRecord> TrajectoryEngine::run(const Vector& psi0, Index n_meas,
                                                    Index n_real, std::uint64_t base_seed,
                                                    int threads, Index first_index) const {
  require(dt_ > 0.0, "set_dt must be called before running trajectories");
  require(n_meas >= 1 && n_real >= 1, "need at least one measurement and one realization");
  std::vector<TrajectoryRecord> out(static_cast<size_t>(n_real));
  const Index n_chunks = (n_real + kTrajectoryChunk - 1) / kTrajectoryChunk;
  parallel_chunks(n_chunks, threads, [&](std::int64_t chunk) {
    const Index lo = chunk * kTrajectoryChunk;
    const Index hi = std::min(n_real, lo + kTrajectoryChunk);
    std::vector<Walker> walkers;
    walkers.reserve(static_cast<size_t>(hi - lo));
    for (Index i = lo; i < hi; ++i) {
      walkers.push_back(start(psi0, derive_seed(base_seed, static_cast<std::uint64_t>(first_index + i)), n_meas));
    }
    for (Index step = 1; step <= n_meas; ++step) advance(walkers, step);
    for (Index i = lo; i < hi; ++i) out[static_cast<size_t>(i)] = std::move(walkers[static_cast<size_t>(i - lo)].rec);
  });
  return out;
}

TrajectoryRecord TrajectoryEngine::run_single(const Vector& psi0, Index n_meas,
                                              std::uint64_t seed) const {
  require(dt_ > 0.0, "set_dt must be called before running trajectories");
  require(n_meas >= 1, "need at least one measurement");
  std::vector<Walker> walkers;
  walkers.push_back(start(psi0, seed, n_meas));
  for (Index step = 1; step <= n_meas; ++step) advance(walkers, step);
  return std::move(walkers.front().rec);
}

TrajectoryRecord run_trajectory(const Spectrum& spectrum, const Vector& psi0,
                                const Observable& obs, double dt, Index n_meas,
                                std::uint64_t seed) {
  TrajectoryEngine engine(spectrum, obs);
  engine.set_dt(dt);
  return engine.run_single(psi0, n_meas, seed);
}

EnsembleStats summarize_ensemble(const std::vector<TrajectoryRecord>& records,
                                 const std::vector<double>& outcome_values, double energy_range,
                                 const EnsembleOptions& opt) {
  require(records.size() >= 2, "ensemble statistics need at least two realizations");
  const Index n_t = records.front().outcomes.size();
  const double dt = records.front().dt;
  const Index nk = static_cast<Index>(outcome_values.size());
  for (const auto& r : records) {
    require(r.outcomes.size() == n_t && r.dt == dt, "records differ in length or interval");
  }
  const double n = static_cast<double>(records.size());
  EnsembleStats st;
  st.dt = dt;
  st.n_real = static_cast<Index>(records.size());
  st.times.resize(n_t);
  for (Index j = 0; j < n_t; ++j) st.times(j) = static_cast<double>(j) * dt;
  st.mean = Vector::Zero(n_t);
  st.std_error = Vector::Zero(n_t);
  st.empirical_p = Matrix::Zero(n_t, nk);
  st.energy_mean = Vector::Zero(n_t);
  st.energy_sigma = Vector::Zero(n_t);
  st.transition_counts = Matrix::Zero(nk, nk);
  for (const auto& r : records) {
    st.mean += r.outcomes;
    st.energy_mean += r.energies;
    for (Index j = 0; j < n_t; ++j) {
      st.empirical_p(j, r.outcome_index[static_cast<size_t>(j)]) += 1.0;
      if (j + 1 < n_t) {
        st.transition_counts(r.outcome_index[static_cast<size_t>(j)], r.outcome_index[static_cast<size_t>(j + 1)]) += 1.0;
      }
    }
    st.max_probability_defect = std::max(st.max_probability_defect, r.max_probability_defect);
  }
  st.mean /= n;
  st.energy_mean /= n;
  st.empirical_p /= n;
  for (const auto& r : records) {
    st.std_error += (r.outcomes - st.mean).cwiseAbs2();
    st.energy_sigma += (r.energies - st.energy_mean).cwiseAbs2();
  }
  st.std_error = (st.std_error / (n - 1.0) / n).cwiseSqrt();
  st.energy_sigma = (st.energy_sigma / (n - 1.0)).cwiseSqrt();

  st.entropy.resize(n_t);
  st.entropy_se.resize(n_t);
  for (Index j = 0; j < n_t; ++j) {
    const Vector p = st.empirical_p.row(j).transpose();
    const double s = shannon_entropy(p);
    double m2 = 0.0;
    for (Index k = 0; k < nk; ++k) {
      if (p(k) > 0.0) m2 += p(k) * std::log(p(k)) * std::log(p(k));
    }
    st.entropy(j) = s;
    st.entropy_se(j) = std::sqrt(std::max(0.0, m2 - s * s) / n);
  }

  st.energy_range = energy_range;
  if (n_t > 1 && energy_range > 0.0) {
    st.sigma_e_over_range = st.energy_sigma.tail(n_t - 1).mean() / energy_range;
    const Vector e = st.energy_mean.tail(n_t - 1);
    st.delta_e = std::sqrt((e.array() - e.mean()).square().mean());
  }

  const double band = opt.fit_band >= 0.0 ? opt.fit_band : 2.0 * st.std_error.tail(n_t - 1).mean();
  st.fit = fit_decay_auto(st.times, st.mean, band);
  const bool short_record =
      !st.fit.ok || 2.0 * st.fit.gamma * (st.fit.t_hi - st.fit.t_lo) < kMinEfoldsForFreeOffset;
  if (opt.equilibrium && short_record) {
    st.fit = fit_decay_fixed_offset(st.times, st.mean, *opt.equilibrium, st.times(0), st.times(n_t - 1));
  }
  if (st.fit.ok) {
    st.gamma_qj = st.fit.gamma;
  } else {
    st.note = "decay fit failed: " + st.fit.note;
  }
  return st;
}

double single_trajectory_entropy(const TrajectoryRecord& record, size_t n_outcomes,
                                 double discard_time) {
  Vector h = Vector::Zero(static_cast<Index>(n_outcomes));
  double used = 0.0;
  for (size_t j = 1; j < record.outcome_index.size(); ++j) {
    if (static_cast<double>(j) * record.dt < discard_time) continue;
    h(record.outcome_index[j]) += 1.0;
    used += 1.0;
  }
  require(used > 0.0, "no outcomes left after discarding the transient");
  return shannon_entropy(h / used);
}

EntropyVerdict entropy_verdict(const EnsembleStats& stats, double single_entropy, double n_se) {
  EntropyVerdict v;
  const Index n_t = stats.entropy.size();
  for (Index j = 0; j + 1 < n_t; ++j) {
    const double drop = stats.entropy(j) - stats.entropy(j + 1);
    const double se = std::hypot(stats.entropy_se(j), stats.entropy_se(j + 1));
    if (drop <= 0.0) continue;
    const double in_se = se > 0.0 ? drop / se : std::numeric_limits<double>::infinity();
    v.worst_drop_in_se = std::max(v.worst_drop_in_se, in_se);
    if (in_se > n_se) v.non_decreasing = false;
  }
  const Index tail = std::max<Index>(1, n_t / 3);
  v.plateau = stats.entropy.tail(tail).mean();
  v.saturation_error = single_entropy > 0.0 ? std::abs(v.plateau / single_entropy - 1.0)
                                            : std::numeric_limits<double>::infinity();
  return v;
}

KernelComparison compare_transitions(const Matrix& counts, const Matrix& kernel) {
  require(counts.rows() == kernel.rows() && counts.cols() == kernel.cols(),
          "count and kernel shapes differ");
  KernelComparison out;
  out.predicted = kernel;
  out.row_counts = counts.rowwise().sum();
  out.empirical = Matrix::Zero(counts.rows(), counts.cols());
  out.z = Matrix::Zero(counts.rows(), counts.cols());
  for (Index i = 0; i < counts.rows(); ++i) {
    const double n = out.row_counts(i);
    if (n <= 0.0) continue;
    for (Index f = 0; f < counts.cols(); ++f) {
      const double emp = counts(i, f) / n;
      const double k = kernel(i, f);
      const double se = std::sqrt(std::max(0.0, k * (1.0 - k)) / n);
      out.empirical(i, f) = emp;
      double z = 0.0;
      if (se > 0.0) {
        z = (emp - k) / se;
      } else if (std::abs(emp - k) > 1e-12) {
        z = std::numeric_limits<double>::infinity();
      }
      out.z(i, f) = z;
      out.max_abs_z = std::max(out.max_abs_z, std::abs(z));
    }
  }
  return out;
}

HistoriesReport consistent_histories_check(const EnsembleStats& stats,
                                           const EvolutionSeries& unmeasured) {
  require(unmeasured.times.size() == stats.times.size(),
          "unmeasured series must be sampled at the measurement times");
  HistoriesReport out;
  out.times = stats.times;
  out.measured = stats.mean;
  out.std_error = stats.std_error;
  out.unmeasured = unmeasured.values;
  out.z = Vector::Zero(stats.times.size());
  for (Index j = 0; j < stats.times.size(); ++j) {
    require(std::abs(unmeasured.times(j) - stats.times(j)) < 1e-9 * (1.0 + stats.times(j)),
            "unmeasured series times differ from measurement times");
    const double diff = stats.mean(j) - unmeasured.values(j);
    double z = 0.0;
    if (stats.std_error(j) > 0.0) {
      z = diff / stats.std_error(j);
    } else if (std::abs(diff) > 1e-10) {
      z = std::numeric_limits<double>::infinity();
    }
    out.z(j) = z;
    out.max_abs_z = std::max(out.max_abs_z, std::abs(z));
  }
  return out;
}

EnergyDriftReport energy_drift_report(const std::vector<TrajectoryRecord>& records,
                                      double energy_range) {
  require(records.size() >= 10, "energy drift report needs at least ten records");
  require(energy_range > 0.0, "energy range must be positive");
  // outcome values play no role in the energy statistics
  const EnsembleStats st = summarize_ensemble(records, std::vector<double>(1, 0.0), energy_range,
                                              EnsembleOptions{0.0, 0.0, std::nullopt});
  EnergyDriftReport out;
  out.times = st.times;
  out.sigma = st.energy_sigma;
  out.energy_range = energy_range;
  out.mean_sigma_over_range = st.sigma_e_over_range;
  out.delta_e = st.delta_e;
  return out;
}

std::vector<TrajectoryRecord> simulate_classical_chain(const Vector& p_inf, double gamma,
                                                       double dt, int s0, Index n_steps,
                                                       Index n_real, std::uint64_t base_seed,
                                                       const std::vector<double>& values) {
  Matrix k = markov_kernel(p_inf, gamma, dt);
  const Index d = p_inf.size();
  require(s0 >= 0 && s0 < d, "initial outcome out of range");
  require(values.empty() || static_cast<Index>(values.size()) == d, "value list length mismatch");
  k = k.cwiseMax(0.0);  // sampling only
  std::vector<TrajectoryRecord> out(static_cast<size_t>(n_real));
  for (Index i = 0; i < n_real; ++i) {
    TrajectoryRecord& r = out[static_cast<size_t>(i)];
    r.seed = derive_seed(base_seed, static_cast<std::uint64_t>(i));
    r.dt = dt;
    Rng rng(r.seed);
    r.outcomes.resize(n_steps + 1);
    r.energies = Vector::Zero(n_steps + 1);
    int s = s0;
    for (Index j = 0; j <= n_steps; ++j) {
      if (j > 0) {
        const Vector row = k.row(s).transpose();
        s = sample_index(row, row.sum(), rng);
      }
      r.outcome_index.push_back(s);
      r.outcomes(j) = values.empty() ? static_cast<double>(s) : values[static_cast<size_t>(s)];
    }
  }
  return out;
}

}  // namespace qtherm
