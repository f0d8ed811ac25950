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

#include "qtherm/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qtherm/optimize.hpp"

namespace qtherm {

Spectrum::Spectrum(Vector energies, Matrix vectors, FreeBasis basis)
    : energies_(std::move(energies)), vectors_(std::move(vectors)), basis_(std::move(basis)) {
  require(vectors_.rows() == vectors_.cols() && vectors_.cols() == energies_.size(),
          "spectrum needs a square coefficient matrix matching the energies");
  require(basis_.dim() == 0 || basis_.dim() == energies_.size(),
          "spectrum dimension differs from its free basis");
}

Matrix Spectrum::to_eigenbasis(const Matrix& op) const {
  const Matrix tmp = op * vectors_;
  Matrix out = vectors_.transpose() * tmp;
  return 0.5 * (out + out.transpose());
}

Spectrum diagonalize(const HamiltonianPair& model) { return diagonalize(model.total(), model.basis); }

Spectrum diagonalize(const Matrix& h, const FreeBasis& basis) {
  require(h.rows() == h.cols(), "Hamiltonian must be square");
  const Index n = h.rows();
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("Hamiltonian is not symmetric");
  }
  Matrix a = h;
  Vector w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n),
                                         a.data(), static_cast<lapack_int>(n), w.data());
  if (info != 0) {
    std::ostringstream os;
    os << "dsyevd failed with info = " << info;
    throw NumericError(os.str());
  }
  ops::fix_column_signs(a);
  Spectrum out(std::move(w), std::move(a), basis);
  double res = eigen_residual(h, out);
  if (res > 1e-8 * scale) {
    // Some OpenBLAS builds (0.3.20 SkylakeX kernels) return wrong vectors;
    // redo the decomposition with Eigen's own solver.
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) throw NumericError("fallback eigensolver did not converge");
    Matrix v = es.eigenvectors();
    ops::fix_column_signs(v);
    out = Spectrum(es.eigenvalues(), std::move(v), basis);
    res = eigen_residual(h, out);
  }
  out.set_max_residual(res);
  if (res > 1e-8 * scale) {
    std::ostringstream os;
    os << "eigensolver residual " << res << " exceeds tolerance";
    throw NumericError(os.str());
  }
  return out;
}

double eigen_residual(const Matrix& h, const Spectrum& spectrum) {
  Matrix r = h * spectrum.vectors();
  r -= spectrum.vectors() * spectrum.energies().asDiagonal();
  return r.cwiseAbs().maxCoeff();
}

double orthonormality_error(const Spectrum& spectrum) {
  Matrix g = spectrum.vectors().transpose() * spectrum.vectors();
  g -= Matrix::Identity(g.rows(), g.cols());
  return g.cwiseAbs().maxCoeff();
}

KernelDensity::KernelDensity(Vector levels, double bandwidth)
    : levels_(std::move(levels)), bandwidth_(bandwidth) {
  require(bandwidth_ > 0.0, "DOS bandwidth must be positive");
  std::sort(levels_.data(), levels_.data() + levels_.size());
}

double KernelDensity::operator()(double energy) const {
  const double cut = 9.0 * bandwidth_;
  const double* begin = levels_.data();
  const double* end = begin + levels_.size();
  const double* lo = std::lower_bound(begin, end, energy - cut);
  const double* hi = std::upper_bound(begin, end, energy + cut);
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * bandwidth_);
  double acc = 0.0;
  for (const double* it = lo; it != hi; ++it) {
    const double x = (energy - *it) / bandwidth_;
    acc += std::exp(-0.5 * x * x);
  }
  return norm * acc;
}

double DosEstimate::integral() const {
  double acc = 0.0;
  for (Index i = 1; i < energy_grid.size(); ++i) {
    acc += 0.5 * (density(i) + density(i - 1)) * (energy_grid(i) - energy_grid(i - 1));
  }
  return acc;
}

std::pair<double, double> central_window(const Vector& sorted_levels, double fraction) {
  const Index n = sorted_levels.size();
  require(n >= 2, "need at least two levels");
  const double f = std::clamp(fraction, 0.0, 1.0);
  const Index lo = static_cast<Index>(std::floor(0.5 * (1.0 - f) * static_cast<double>(n - 1)));
  const Index hi = static_cast<Index>(std::ceil(0.5 * (1.0 + f) * static_cast<double>(n - 1)));
  return {sorted_levels(lo), sorted_levels(std::min(hi, n - 1))};
}

double default_bandwidth(const Vector& levels, double central_fraction) {
  Vector sorted = levels;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  const auto [lo, hi] = central_window(sorted, central_fraction);
  const Index n = sorted.size();
  const Index i_lo = static_cast<Index>(std::floor(0.5 * (1.0 - central_fraction) * (n - 1)));
  const Index i_hi = std::min(n - 1, static_cast<Index>(std::ceil(0.5 * (1.0 + central_fraction) * (n - 1))));
  const double spacing = (hi - lo) / static_cast<double>(std::max<Index>(1, i_hi - i_lo));
  require(spacing > 0.0, "levels are fully degenerate in the central window");
  return 5.0 * spacing;
}

DosEstimate estimate_dos(const Vector& levels, double bandwidth, Index n_grid) {
  require(levels.size() >= 2, "DOS estimate needs at least two levels");
  require(bandwidth > 0.0, "DOS bandwidth must be positive");
  require(n_grid >= 2, "DOS grid needs at least two points");
  const KernelDensity kd(levels, bandwidth);
  DosEstimate out;
  out.bandwidth = bandwidth;
  const double lo = kd.levels()(0) - 6.0 * bandwidth;
  const double hi = kd.levels()(kd.levels().size() - 1) + 6.0 * bandwidth;
  out.energy_grid = Vector::LinSpaced(n_grid, lo, hi);
  out.density.resize(n_grid);
  for (Index i = 0; i < n_grid; ++i) out.density(i) = kd(out.energy_grid(i));
  return out;
}

DosEstimate estimate_dos(const Vector& levels, double bandwidth, const Vector& bath_levels,
                         const Vector& system_energies, Index n_grid) {
  DosEstimate out = estimate_dos(levels, bandwidth, n_grid);
  const KernelDensity bath(bath_levels, bandwidth);
  Vector db(n_grid);
  Vector summed(n_grid);
  for (Index i = 0; i < n_grid; ++i) {
    const double e = out.energy_grid(i);
    db(i) = bath(e);
    double acc = 0.0;
    for (Index s = 0; s < system_energies.size(); ++s) acc += bath(e - system_energies(s));
    summed(i) = acc;
  }
  // Bulk: grid points where D(E) exceeds half of its maximum.
  const double cut = 0.5 * out.density.maxCoeff();
  double worst = 0.0;
  for (Index i = 0; i < n_grid; ++i) {
    if (out.density(i) < cut) continue;
    worst = std::max(worst, std::abs(summed(i) - out.density(i)) / out.density(i));
  }
  out.bath_density = std::move(db);
  out.relation_error = worst;
  return out;
}

double window_count_density(const Vector& levels, double e, double half_width) {
  require(half_width > 0.0, "window half-width must be positive");
  Index count = 0;
  for (Index i = 0; i < levels.size(); ++i) {
    if (std::abs(levels(i) - e) <= half_width) ++count;
  }
  return static_cast<double>(count) / (2.0 * half_width);
}

double EnvelopeFit::normalization() const {
  if (bin_centers.size() < 2 || omega0 <= 0.0) return 0.0;
  const double width = bin_centers(1) - bin_centers(0);
  return lambda_avg.sum() * width / omega0;
}

namespace {

// Lorentzian averaged over a bin of the given width.
double binned_lorentzian(double center, double width, double omega0, double gamma) {
  const double a = std::atan((center + 0.5 * width) / gamma);
  const double b = std::atan((center - 0.5 * width) / gamma);
  return omega0 / std::numbers::pi * (a - b) / width;
}

}  // namespace

EnvelopeFit fit_envelope(const Spectrum& spectrum, double e_lo, double e_hi, Index n_bins,
                         double max_offset) {
  require(n_bins >= 3, "envelope fit needs at least three bins");
  require(e_hi > e_lo, "empty energy window");
  const Vector& en = spectrum.energies();
  std::vector<Index> states;
  for (Index mu = 0; mu < spectrum.dim(); ++mu) {
    if (en(mu) >= e_lo && en(mu) <= e_hi) states.push_back(mu);
  }
  require(states.size() >= 50, "envelope window must contain at least 50 eigenstates");
  if (max_offset <= 0.0) max_offset = 0.1 * (spectrum.max_energy() - spectrum.min_energy());

  const Vector& free_e = spectrum.basis().energies();
  const double width = 2.0 * max_offset / static_cast<double>(n_bins);
  EnvelopeFit out;
  out.bin_centers = Vector::LinSpaced(n_bins, -max_offset + 0.5 * width, max_offset - 0.5 * width);
  Vector sums = Vector::Zero(n_bins);
  out.counts.assign(static_cast<size_t>(n_bins), 0);
  for (Index mu : states) {
    for (Index p = 0; p < spectrum.dim(); ++p) {
      const double de = en(mu) - free_e(p);
      if (de < -max_offset || de >= max_offset) continue;
      const Index b = std::min<Index>(n_bins - 1, static_cast<Index>((de + max_offset) / width));
      const double c = spectrum.vectors()(p, mu);
      sums(b) += c * c;
      ++out.counts[static_cast<size_t>(b)];
    }
  }
  out.lambda_avg = Vector::Zero(n_bins);
  for (Index b = 0; b < n_bins; ++b) {
    if (out.counts[static_cast<size_t>(b)] > 0) {
      out.lambda_avg(b) = sums(b) / static_cast<double>(out.counts[static_cast<size_t>(b)]);
    }
  }
  // Local free level spacing over the window.
  Index n_free = 0;
  for (Index p = 0; p < free_e.size(); ++p) {
    if (free_e(p) >= e_lo && free_e(p) <= e_hi) ++n_free;
  }
  out.omega0 = (e_hi - e_lo) / static_cast<double>(std::max<Index>(1, n_free));

  const double total = out.lambda_avg.sum();
  const double peak = out.lambda_avg.maxCoeff();
  if (total <= 0.0 || peak >= 0.999 * total) {
    out.flagged = true;
    out.note = "envelope concentrated in a single bin; width unresolved";
    out.fit_residual = std::numeric_limits<double>::infinity();
    return out;
  }
  auto rss = [&](double log_gamma) {
    const double g = std::exp(log_gamma);
    double acc = 0.0;
    for (Index b = 0; b < n_bins; ++b) {
      const double r = out.lambda_avg(b) - binned_lorentzian(out.bin_centers(b), width, out.omega0, g);
      acc += r * r;
    }
    return acc;
  };
  const double lo = std::log(0.05 * width);
  const double hi = std::log(2.0 * max_offset);
  const ScalarMinimum best = minimize_scan_golden(rss, lo, hi, 200);
  out.fit_residual = std::sqrt(best.value / static_cast<double>(n_bins));
  if (best.at_boundary) {
    out.flagged = true;
    out.note = "Lorentzian width fit hit the search boundary";
    return out;
  }
  out.gamma = std::exp(best.x);
  return out;
}

}  // namespace qtherm
