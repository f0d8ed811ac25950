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

#include "qtherm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "qtherm/optimize.hpp"

namespace qtherm {

Vector log_time_grid(double t_min, double t_max, Index n) {
  require(t_min > 0.0 && t_max > t_min && n >= 2, "invalid log time grid");
  Vector out(n);
  out(0) = 0.0;
  const double a = std::log(t_min);
  const double b = std::log(t_max);
  for (Index i = 1; i < n; ++i) {
    out(i) = std::exp(a + (b - a) * static_cast<double>(i - 1) / static_cast<double>(n - 2));
  }
  return out;
}

Vector linear_time_grid(double t_max, Index n) {
  require(t_max > 0.0 && n >= 2, "invalid linear time grid");
  return Vector::LinSpaced(n, 0.0, t_max);
}

Vector free_state(Index dim, Index product) {
  require(product >= 0 && product < dim, "free state index out of range");
  Vector v = Vector::Zero(dim);
  v(product) = 1.0;
  return v;
}

namespace {

void check_normalized(const Vector& psi0, Index dim) {
  require(psi0.size() == dim, "initial state dimension mismatch");
  require(std::abs(psi0.norm() - 1.0) < 1e-10, "initial state is not normalized");
}

}  // namespace

EvolutionSeries evolve_expectation(const Spectrum& spectrum, const Vector& psi0,
                                   const Matrix& o_eig, const Vector& times) {
  check_normalized(psi0, spectrum.dim());
  const Vector a = spectrum.vectors().transpose() * psi0;
  const Vector& e = spectrum.energies();
  const Index n_t = times.size();
  EvolutionSeries out;
  out.times = times;
  out.values.resize(n_t);
  constexpr Index kChunk = 64;
  for (Index start = 0; start < n_t; start += kChunk) {
    const Index m = std::min(kChunk, n_t - start);
    Matrix c(spectrum.dim(), m);
    Matrix s(spectrum.dim(), m);
    for (Index k = 0; k < m; ++k) {
      const double t = times(start + k);
      for (Index mu = 0; mu < spectrum.dim(); ++mu) {
        c(mu, k) = a(mu) * std::cos(e(mu) * t);
        s(mu, k) = a(mu) * std::sin(e(mu) * t);
      }
    }
    const Matrix oc = o_eig * c;
    const Matrix os = o_eig * s;
    for (Index k = 0; k < m; ++k) {
      out.values(start + k) = c.col(k).dot(oc.col(k)) + s.col(k).dot(os.col(k));
    }
  }
  for (Index p = 0; p < psi0.size(); ++p) {
    if (psi0(p) == 1.0) out.initial_state = p;
  }
  return out;
}

EvolutionSeries evolve_expectation(const Spectrum& spectrum, const Vector& psi0,
                                   const Observable& obs, const Vector& times) {
  EvolutionSeries out = evolve_expectation(spectrum, psi0, spectrum.to_eigenbasis(obs.matrix), times);
  out.observable = obs.name;
  return out;
}

namespace {

struct LinearFit {
  double a = 0.0;
  double b = 0.0;
  double rss = 0.0;
};

LinearFit fit_amplitudes(const Vector& t, const Vector& y, double gamma) {
  const Index n = t.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (Index i = 0; i < n; ++i) {
    const double x = std::exp(-2.0 * gamma * t(i));
    sx += x;
    sy += y(i);
    sxx += x * x;
    sxy += x * y(i);
  }
  const double nn = static_cast<double>(n);
  const double det = nn * sxx - sx * sx;
  LinearFit f;
  if (std::abs(det) < 1e-300) {
    f.b = sy / nn;
  } else {
    f.a = (nn * sxy - sx * sy) / det;
    f.b = (sy - f.a * sx) / nn;
  }
  for (Index i = 0; i < n; ++i) {
    const double r = y(i) - f.a * std::exp(-2.0 * gamma * t(i)) - f.b;
    f.rss += r * r;
  }
  return f;
}

}  // namespace

DecayFit fit_decay(const Vector& t, const Vector& y, double t_lo, double t_hi) {
  require(t.size() == y.size(), "time and value series differ in length");
  std::vector<Index> keep;
  for (Index i = 0; i < t.size(); ++i) {
    if (t(i) >= t_lo && t(i) <= t_hi) keep.push_back(i);
  }
  DecayFit out;
  out.t_lo = t_lo;
  out.t_hi = t_hi;
  if (keep.size() < 4) {
    out.note = "fewer than four points in the fit window";
    return out;
  }
  Vector tt(static_cast<Index>(keep.size()));
  Vector yy(static_cast<Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    tt(static_cast<Index>(k)) = t(keep[k]);
    yy(static_cast<Index>(k)) = y(keep[k]);
  }
  const double spread = yy.maxCoeff() - yy.minCoeff();
  if (spread < 1e-12 * (1.0 + yy.cwiseAbs().maxCoeff())) {
    out.note = "constant series; decay rate unidentifiable";
    out.o_end = yy.mean();
    out.o_start = out.o_end;
    return out;
  }
  double t_pos = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < tt.size(); ++i) {
    if (tt(i) > tt.minCoeff()) t_pos = std::min(t_pos, tt(i) - tt.minCoeff());
  }
  const double span = tt.maxCoeff() - tt.minCoeff();
  const double lo = std::log(0.01 / span);
  const double hi = std::log(20.0 / t_pos);
  auto rss = [&](double lg) { return fit_amplitudes(tt, yy, std::exp(lg)).rss; };
  const ScalarMinimum best = minimize_scan_golden(rss, lo, hi, 400);
  const double gamma = std::exp(best.x);
  const LinearFit lin = fit_amplitudes(tt, yy, gamma);
  out.gamma = gamma;
  out.amplitude = lin.a;
  out.o_end = lin.b;
  out.o_start = lin.a * std::exp(-2.0 * gamma * tt.minCoeff()) + lin.b;
  out.residual = std::sqrt(lin.rss / static_cast<double>(tt.size()));
  if (best.at_boundary) {
    out.note = "decay rate at the edge of the search range";
    return out;
  }
  out.ok = true;
  return out;
}

DecayFit fit_decay_fixed_offset(const Vector& t, const Vector& y, double offset, double t_lo,
                                double t_hi) {
  require(t.size() == y.size(), "time and value series differ in length");
  std::vector<double> tv, yv;
  for (Index i = 0; i < t.size(); ++i) {
    if (t(i) >= t_lo && t(i) <= t_hi) {
      tv.push_back(t(i));
      yv.push_back(y(i) - offset);
    }
  }
  DecayFit out;
  out.t_lo = t_lo;
  out.t_hi = t_hi;
  out.o_end = offset;
  if (tv.size() < 3) {
    out.note = "fewer than three points in the fit window";
    return out;
  }
  const Eigen::Map<const Vector> tt(tv.data(), static_cast<Index>(tv.size()));
  const Eigen::Map<const Vector> yy(yv.data(), static_cast<Index>(yv.size()));
  // For fixed Gamma the best amplitude is a projection.
  auto amplitude = [&](double g) {
    const Vector f = (-2.0 * g * tt.array()).exp().matrix();
    return std::make_pair(f.dot(yy) / f.squaredNorm(), f);
  };
  auto rss = [&](double lg) {
    const auto [a, f] = amplitude(std::exp(lg));
    return (yy - a * f).squaredNorm();
  };
  const double span = tt.maxCoeff() - tt.minCoeff();
  double t_pos = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < tt.size(); ++i) {
    if (tt(i) > tt.minCoeff()) t_pos = std::min(t_pos, tt(i) - tt.minCoeff());
  }
  const ScalarMinimum best = minimize_scan_golden(rss, std::log(1e-4 / span), std::log(20.0 / t_pos), 400);
  out.gamma = std::exp(best.x);
  const auto [a, f] = amplitude(out.gamma);
  out.amplitude = a;
  out.o_start = a * std::exp(-2.0 * out.gamma * tt.minCoeff()) + offset;
  out.residual = std::sqrt((yy - a * f).squaredNorm() / static_cast<double>(tt.size()));
  if (best.at_boundary) {
    out.note = "decay rate at the edge of the search range";
    return out;
  }
  out.ok = true;
  out.note = "offset fixed";
  return out;
}

DecayFit fit_decay(const EvolutionSeries& series, double t_lo, double t_hi) {
  return fit_decay(series.times, series.values, t_lo, t_hi);
}

std::pair<double, double> default_fit_window(const Vector& t, const Vector& y, double band) {
  const double t0 = t.minCoeff();
  const double t1 = t.maxCoeff();
  const DecayFit pre = fit_decay(t, y, t0, t1);
  if (!pre.ok) return {t0, t1};
  const double tau = 1.0 / (2.0 * pre.gamma);
  const Index n = t.size();
  for (Index i = 0; i < n; ++i) {
    if (t(i) + tau > t1) break;
    bool inside = true;
    for (Index j = i; j < n && t(j) <= t(i) + tau; ++j) {
      if (std::abs(y(j) - pre.o_end) > band) {
        inside = false;
        break;
      }
    }
    if (inside) {
      const double end = std::max(t(i) + tau, std::min(t1, 1.5 / pre.gamma));
      return {t0, end};
    }
  }
  return {t0, t1};
}

DecayFit fit_decay_auto(const Vector& t, const Vector& y, double band) {
  const auto [lo, hi] = default_fit_window(t, y, band);
  return fit_decay(t, y, lo, hi);
}

FluctuationReport equilibrium_fluctuations(const Spectrum& spectrum, const Vector& psi0,
                                           const Matrix& o_eig, double gamma) {
  check_normalized(psi0, spectrum.dim());
  const Index d = spectrum.dim();
  const Vector a = spectrum.vectors().transpose() * psi0;
  const Vector& e = spectrum.energies();

  std::vector<Index> start{0};
  for (Index mu = 1; mu < d; ++mu) {
    if (e(mu) - e(mu - 1) > kDegenerateGap) start.push_back(mu);
  }
  start.push_back(d);
  const Index n_c = static_cast<Index>(start.size()) - 1;

  // z.col(c) = sum_{nu in c} a_nu O.col(nu); x(c, c') = sum_{mu in c} a_mu z(mu, c').
  Matrix z = Matrix::Zero(d, n_c);
  for (Index c = 0; c < n_c; ++c) {
    for (Index nu = start[static_cast<size_t>(c)]; nu < start[static_cast<size_t>(c + 1)]; ++nu) {
      z.col(c).noalias() += a(nu) * o_eig.col(nu);
    }
  }
  double total_sq = 0.0;
  double diag_sq = 0.0;
  double o_inf = 0.0;
  double o2 = 0.0;
  for (Index cp = 0; cp < n_c; ++cp) {
    o2 += z.col(cp).squaredNorm();
    for (Index c = 0; c < n_c; ++c) {
      double x = 0.0;
      for (Index mu = start[static_cast<size_t>(c)]; mu < start[static_cast<size_t>(c + 1)]; ++mu) {
        x += a(mu) * z(mu, cp);
      }
      total_sq += x * x;
      if (c == cp) {
        diag_sq += x * x;
        o_inf += x;
      }
    }
  }
  FluctuationReport out;
  out.o_infinity = o_inf;
  out.sigma2 = std::max(0.0, o2 - o_inf * o_inf);
  out.delta2 = std::max(0.0, total_sq - diag_sq);
  out.gamma_used = gamma;
  if (out.delta2 < 1e-14) {
    out.flagged = true;
    out.note = "time fluctuations vanish; density of states not inferable";
  } else if (gamma > 0.0) {
    out.dos_inferred = dos_from_fluctuations(out.sigma2, out.delta2, gamma);
  }
  return out;
}

FluctuationReport equilibrium_fluctuations(const Spectrum& spectrum, const Vector& psi0,
                                           const Observable& obs, double gamma) {
  return equilibrium_fluctuations(spectrum, psi0, spectrum.to_eigenbasis(obs.matrix), gamma);
}

double dos_from_fluctuations(double sigma2, double delta2, double gamma) {
  require(delta2 > 0.0 && gamma > 0.0, "need positive time fluctuations and decay rate");
  return sigma2 / (delta2 * 4.0 * std::numbers::pi * gamma);
}

namespace {

std::vector<Index> max_observable_states(const FreeBasis& basis, const Observable& obs) {
  // For an observable that is not diagonal in the free basis the largest
  // free-basis expectation value stands in for max(O).
  const Vector diag = obs.matrix.diagonal();
  const double top = obs.diagonal_in_free_basis ? obs.max_value() : diag.maxCoeff();
  std::vector<Index> out;
  for (Index p = 0; p < basis.dim(); ++p) {
    if (std::abs(diag(p) - top) < 1e-9) out.push_back(p);
  }
  return out;
}

}  // namespace

Index select_mid_spectrum_max(const FreeBasis& basis, const Observable& obs) {
  const auto candidates = max_observable_states(basis, obs);
  require(!candidates.empty(), "no free state attains max(O)");
  const Vector sorted = basis.sorted_energies();
  const double median = sorted((sorted.size() - 1) / 2);
  Index best = candidates.front();
  for (Index p : candidates) {
    const double dp = std::abs(basis.energies()(p) - median);
    const double db = std::abs(basis.energies()(best) - median);
    if (dp < db - 1e-12) best = p;
  }
  return best;
}

std::vector<Index> select_central_half_max(const FreeBasis& basis, const Observable& obs,
                                           double e_min, double e_max, Index n_states) {
  require(n_states >= 1, "need at least one initial state");
  const double w = e_max - e_min;
  const double lo = e_min + 0.25 * w;
  const double hi = e_max - 0.25 * w;
  std::vector<Index> candidates;
  for (Index p : max_observable_states(basis, obs)) {
    const double e = basis.energies()(p);
    if (e >= lo && e <= hi) candidates.push_back(p);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](Index a, Index b) {
    return basis.energies()(a) < basis.energies()(b);
  });
  if (static_cast<Index>(candidates.size()) <= n_states) return candidates;
  std::vector<Index> out;
  const double n_c = static_cast<double>(candidates.size() - 1);
  for (Index k = 0; k < n_states; ++k) {
    const double pos = n_states == 1 ? 0.5 * n_c : n_c * static_cast<double>(k) / static_cast<double>(n_states - 1);
    const Index p = candidates[static_cast<size_t>(std::llround(pos))];
    if (out.empty() || out.back() != p) out.push_back(p);
  }
  return out;
}

std::vector<DosRow> measure_dos_experiment(const Spectrum& spectrum, const Observable& obs,
                                           const std::vector<Index>& states,
                                           const DosExperimentOptions& opt) {
  const Matrix o_eig = spectrum.to_eigenbasis(obs.matrix);
  const Vector times = opt.times.size() > 0 ? opt.times : log_time_grid(1e-2, 200.0, 400);
  const double bw = opt.bandwidth > 0.0 ? opt.bandwidth : default_bandwidth(spectrum.energies());
  const KernelDensity exact(spectrum.energies(), bw);
  std::vector<DosRow> rows;
  rows.reserve(states.size());
  for (Index p : states) {
    DosRow row;
    row.state = p;
    row.energy = spectrum.basis().energies()(p);
    row.dos_exact = exact(row.energy);
    const Vector psi0 = free_state(spectrum.dim(), p);
    const FluctuationReport fl = equilibrium_fluctuations(spectrum, psi0, o_eig, 0.0);
    row.sigma2 = fl.sigma2;
    row.delta2 = fl.delta2;
    const EvolutionSeries series = evolve_expectation(spectrum, psi0, o_eig, times);
    const DecayFit fit =
        fit_decay_auto(series.times, series.values, opt.band_factor * std::sqrt(fl.delta2));
    row.gamma = fit.gamma;
    if (!fit.ok) {
      row.note = fit.note;
    } else if (fl.delta2 < 1e-14) {
      row.note = fl.note;
    } else {
      row.dos_inferred = dos_from_fluctuations(fl.sigma2, fl.delta2, fit.gamma);
      row.ok = true;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace qtherm
