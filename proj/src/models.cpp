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

#include "qtherm/models.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace qtherm {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kOscillatorChain: return "oscillator_chain";
    case ModelKind::kBlbqChain: return "blbq_chain";
    case ModelKind::kSpinHalfChain: return "spin_half_chain";
  }
  return "unknown";
}

Matrix HamiltonianPair::total() const {
  Matrix h = v;
  h.diagonal() += h0;
  return h;
}

Matrix HamiltonianPair::frame() const {
  if (identity_frame) return Matrix::Identity(dim(), dim());
  return ops::kron(frame_system, frame_bath);
}

namespace ops {

Matrix spin_z(double spin) {
  const Index d = static_cast<Index>(std::lround(2 * spin)) + 1;
  Matrix m = Matrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) m(k, k) = -spin + static_cast<double>(k);
  return m;
}

Matrix spin_plus(double spin) {
  const Index d = static_cast<Index>(std::lround(2 * spin)) + 1;
  Matrix m = Matrix::Zero(d, d);
  for (Index k = 0; k + 1 < d; ++k) {
    const double mz = -spin + static_cast<double>(k);
    m(k + 1, k) = std::sqrt(spin * (spin + 1) - mz * (mz + 1));
  }
  return m;
}

Matrix spin_x(double spin) {
  const Matrix sp = spin_plus(spin);
  return 0.5 * (sp + sp.transpose());
}

Matrix spin_y_imag(double spin) {
  const Matrix sp = spin_plus(spin);
  return 0.5 * (sp - sp.transpose());
}

Matrix shift_down(int cutoff) {
  const Index d = 2 * cutoff + 1;
  Matrix t = Matrix::Zero(d, d);
  for (Index k = 0; k + 1 < d; ++k) t(k, k + 1) = 1.0;
  return t;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix embed(const std::vector<Index>& dims,
             const std::vector<std::pair<int, const Matrix*>>& factors) {
  Matrix out = Matrix::Ones(1, 1);
  for (int slot = 0; slot < static_cast<int>(dims.size()); ++slot) {
    const Matrix* f = nullptr;
    for (const auto& [s, m] : factors) {
      if (s == slot) f = m;
    }
    const Index ds = dims[static_cast<size_t>(slot)];
    if (f != nullptr) {
      out = kron(out, *f);
    } else {
      out = kron(out, Matrix::Identity(ds, ds));
    }
  }
  return out;
}

void fix_column_signs(Matrix& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    Index arg = 0;
    double best = -1.0;
    for (Index r = 0; r < vectors.rows(); ++r) {
      // Ties go to the lowest index so the choice is reproducible.
      const double a = std::abs(vectors(r, c));
      if (a > best + 1e-12) {
        best = a;
        arg = r;
      }
    }
    if (vectors(arg, c) < 0) vectors.col(c) *= -1.0;
  }
}

}  // namespace ops

namespace {

void check_dimension(Index d, const BuildOptions& opt) {
  if (d > opt.max_dim) {
    std::ostringstream os;
    os << "Hilbert space dimension " << d << " exceeds the configured cap " << opt.max_dim;
    throw DomainError(os.str());
  }
}

Index power(Index base, int exp) {
  Index out = 1;
  for (int i = 0; i < exp; ++i) {
    if (out > std::numeric_limits<Index>::max() / base) return std::numeric_limits<Index>::max();
    out *= base;
  }
  return out;
}

// Physical site (0-based) -> tensor slot.
std::vector<int> slot_map(int n_sites, const BuildOptions& opt) {
  std::vector<int> slots(static_cast<size_t>(n_sites));
  slots[0] = 0;
  if (opt.bath_slot_order.empty()) {
    std::iota(slots.begin(), slots.end(), 0);
    return slots;
  }
  require(static_cast<int>(opt.bath_slot_order.size()) == n_sites - 1,
          "bath_slot_order must list every bath site");
  std::vector<int> check = opt.bath_slot_order;
  std::sort(check.begin(), check.end());
  for (int k = 0; k < n_sites - 1; ++k) {
    require(check[static_cast<size_t>(k)] == k, "bath_slot_order must be a permutation");
    slots[static_cast<size_t>(k + 1)] = 1 + opt.bath_slot_order[static_cast<size_t>(k)];
  }
  return slots;
}

struct LocalEigen {
  Vector values;
  Matrix vectors;
};

LocalEigen symmetric_eigen(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success) throw NumericError("local eigensolver failed");
  LocalEigen out{es.eigenvalues(), es.eigenvectors()};
  ops::fix_column_signs(out.vectors);
  return out;
}

// Rotates computational-basis H0 and V into the free basis and validates the
// result. frame = W_S (x) W_B, unless identity.
HamiltonianPair finish(ModelKind kind, std::vector<std::pair<std::string, double>> params,
                       std::vector<Index> dims, const Matrix& h0_comp, const Matrix& v_comp,
                       LocalEigen system, LocalEigen bath, bool identity_frame,
                       const BuildOptions& opt) {
  HamiltonianPair out;
  out.kind = kind;
  out.params = std::move(params);
  out.basis = FreeBasis(std::move(dims), system.values, bath.values);
  out.frame_system = std::move(system.vectors);
  out.frame_bath = std::move(bath.vectors);
  out.identity_frame = identity_frame;
  out.bath_slot_order = opt.bath_slot_order;
  const Index d = out.basis.dim();
  if (identity_frame) {
    out.h0 = h0_comp.diagonal();
    out.v = v_comp;
  } else {
    const Matrix w = out.frame();
    const Matrix h0f = w.transpose() * h0_comp * w;
    out.h0 = h0f.diagonal();
    Matrix off = h0f;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, h0f.cwiseAbs().maxCoeff())) {
      throw NumericError("free Hamiltonian is not diagonal in the constructed free basis");
    }
    out.v = w.transpose() * v_comp * w;
  }
  if ((out.h0 - out.basis.energies()).cwiseAbs().maxCoeff() >
      1e-9 * std::max(1.0, out.h0.cwiseAbs().maxCoeff())) {
    throw NumericError("free energies disagree with the diagonal of H0");
  }
  out.h0 = out.basis.energies();
  const double asym = (out.v - out.v.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, out.v.cwiseAbs().maxCoeff())) {
    throw NumericError("coupling V is not symmetric after construction");
  }
  out.v = 0.5 * (out.v + out.v.transpose()).eval();
  (void)d;
  return out;
}

LocalEigen diagonal_eigen(const Vector& values) {
  return LocalEigen{values, Matrix::Identity(values.size(), values.size())};
}

}  // namespace

HamiltonianPair build_oscillator_chain(const OscillatorParams& p, const BuildOptions& opt) {
  require(p.n_sites >= 1, "oscillator chain needs n_sites >= 1");
  require(p.spin_cutoff >= 1, "oscillator chain needs spin_cutoff >= 1");
  const Index ds = 2 * p.spin_cutoff + 1;
  check_dimension(power(ds, p.n_sites), opt);
  const auto slots = slot_map(p.n_sites, opt);
  std::vector<Index> dims(static_cast<size_t>(p.n_sites), ds);

  Vector eps(ds);
  for (Index k = 0; k < ds; ++k) {
    const double s = static_cast<double>(k - p.spin_cutoff);
    eps(k) = s * s;
  }
  const Matrix local_h0 = eps.asDiagonal();
  const Matrix t = ops::shift_down(p.spin_cutoff);
  const Matrix kin = t + t.transpose();

  const Index d = power(ds, p.n_sites);
  Matrix h0 = Matrix::Zero(d, d);
  Matrix v = Matrix::Zero(d, d);
  for (int i = 0; i < p.n_sites; ++i) {
    const int si = slots[static_cast<size_t>(i)];
    h0 += ops::embed(dims, {{si, &local_h0}});
    if (p.h_x != 0.0) v += p.h_x * ops::embed(dims, {{si, &kin}});
  }
  // Neighbouring oscillators exchange one quantum of displacement each:
  // (T + T^t)_i (T + T^t)_{i+1} covers both hopping orders and their conjugates.
  if (p.j != 0.0) {
    for (int i = 0; i + 1 < p.n_sites; ++i) {
      v += p.j * ops::embed(dims, {{slots[static_cast<size_t>(i)], &kin},
                                   {slots[static_cast<size_t>(i + 1)], &kin}});
    }
  }

  Vector bath_e = Vector::Zero(1);
  for (int i = 1; i < p.n_sites; ++i) {
    Vector next(bath_e.size() * ds);
    for (Index a = 0; a < bath_e.size(); ++a) {
      for (Index k = 0; k < ds; ++k) next(a * ds + k) = bath_e(a) + eps(k);
    }
    bath_e = next;
  }
  std::vector<std::pair<std::string, double>> params = {
      {"n_sites", p.n_sites}, {"spin_cutoff", p.spin_cutoff}, {"h_x", p.h_x}, {"j", p.j}};
  return finish(ModelKind::kOscillatorChain, std::move(params), dims, h0, v, diagonal_eigen(eps),
                diagonal_eigen(bath_e), true, opt);
}

HamiltonianPair build_blbq_chain(const BlbqParams& p, const BuildOptions& opt) {
  require(p.n_sites >= 2, "BLBQ chain needs n_sites >= 2");
  require(p.spin > 0 && std::abs(2 * p.spin - std::round(2 * p.spin)) < 1e-12,
          "spin must be a positive integer or half-integer");
  const Index ds = static_cast<Index>(std::lround(2 * p.spin)) + 1;
  check_dimension(power(ds, p.n_sites), opt);
  const auto slots = slot_map(p.n_sites, opt);
  std::vector<Index> dims(static_cast<size_t>(p.n_sites), ds);

  const Matrix sz = ops::spin_z(p.spin);
  const Matrix sx = ops::spin_x(p.spin);
  const Matrix sy = ops::spin_y_imag(p.spin);  // S_y = -i sy
  const Matrix local = p.h_z * sz + p.h_x * sx;
  const Matrix sx2 = sx * sx;
  const Matrix sy2 = sy * sy;  // (S_y)^2 = -(sy)^2, sign restored below
  const Matrix sz2 = sz * sz;

  const Index d = power(ds, p.n_sites);
  Matrix h0 = Matrix::Zero(d, d);
  Matrix v = Matrix::Zero(d, d);
  for (int i = 0; i < p.n_sites; ++i) {
    h0 += ops::embed(dims, {{slots[static_cast<size_t>(i)], &local}});
  }
  for (int i = 0; i + 1 < p.n_sites; ++i) {
    const int a = slots[static_cast<size_t>(i)];
    const int b = slots[static_cast<size_t>(i + 1)];
    // The bond operator below is Hermitian, so 1/2 (X + X^dagger) = X.
    Matrix bond = ops::embed(dims, {{a, &sx}, {b, &sx}});
    bond -= ops::embed(dims, {{a, &sy}, {b, &sy}});
    bond += p.delta * ops::embed(dims, {{a, &sz}, {b, &sz}});
    Matrix quad = ops::embed(dims, {{a, &sx2}, {b, &sx2}});
    quad += ops::embed(dims, {{a, &sy2}, {b, &sy2}});  // (S_y S_y)^2 = sy^2 (x) sy^2
    quad += p.delta * ops::embed(dims, {{a, &sz2}, {b, &sz2}});
    Matrix x = bond + p.q * quad;
    v += 0.5 * p.j * (x + x.transpose());
  }

  LocalEigen site = symmetric_eigen(local);
  Matrix w_bath = Matrix::Ones(1, 1);
  Vector e_bath = Vector::Zero(1);
  for (int i = 1; i < p.n_sites; ++i) {
    w_bath = ops::kron(w_bath, site.vectors);
    Vector next(e_bath.size() * ds);
    for (Index x = 0; x < e_bath.size(); ++x) {
      for (Index k = 0; k < ds; ++k) next(x * ds + k) = e_bath(x) + site.values(k);
    }
    e_bath = next;
  }
  const bool identity = (site.vectors - Matrix::Identity(ds, ds)).cwiseAbs().maxCoeff() == 0.0;
  std::vector<std::pair<std::string, double>> params = {
      {"n_sites", p.n_sites}, {"spin", p.spin}, {"h_z", p.h_z}, {"h_x", p.h_x},
      {"j", p.j},             {"delta", p.delta}, {"q", p.q}};
  HamiltonianPair out = finish(ModelKind::kBlbqChain, std::move(params), dims, h0, v, site,
                               LocalEigen{e_bath, w_bath}, identity, opt);
  out.spin = p.spin;
  return out;
}

HamiltonianPair build_spin_half_chain(const SpinHalfParams& p, const BuildOptions& opt) {
  require(p.n_sites >= 3, "spin-1/2 chain needs n_sites >= 3 (coupling targets site 3)");
  check_dimension(power(2, p.n_sites), opt);
  const auto slots = slot_map(p.n_sites, opt);
  std::vector<Index> dims(static_cast<size_t>(p.n_sites), 2);

  // Pauli matrices on (down, up).
  const Matrix sp = ops::spin_plus(0.5);
  const Matrix sigma_z = 2.0 * ops::spin_z(0.5);
  const Matrix sigma_x = sp + sp.transpose();
  const Matrix a = sp - sp.transpose();  // sigma_y = -i a
  // Flip-flop term sigma+ sigma- + sigma- sigma+ normalised so that it equals
  // sigma_x sigma_x + sigma_y sigma_y (flip amplitude 2).
  auto hop = [&](int i, int j) {
    const int si = slots[static_cast<size_t>(i)];
    const int sj = slots[static_cast<size_t>(j)];
    Matrix m = ops::embed(dims, {{si, &sigma_x}, {sj, &sigma_x}});
    m -= ops::embed(dims, {{si, &a}, {sj, &a}});
    return m;
  };

  const Index d = power(2, p.n_sites);
  const Matrix local_s = p.b_z_system * sigma_z + p.b_x_system * sigma_x;
  const Matrix local_b = p.b_z_bath * sigma_z + p.b_x_bath * sigma_x;
  Matrix h_s = ops::embed(dims, {{slots[0], &local_s}});
  Matrix h_b = Matrix::Zero(d, d);
  for (int i = 1; i < p.n_sites; ++i) {
    h_b += ops::embed(dims, {{slots[static_cast<size_t>(i)], &local_b}});
  }
  for (int i = 1; i + 1 < p.n_sites; ++i) {
    if (p.j_z_bath != 0.0) {
      h_b += p.j_z_bath * ops::embed(dims, {{slots[static_cast<size_t>(i)], &sigma_z},
                                            {slots[static_cast<size_t>(i + 1)], &sigma_z}});
    }
    if (p.j_x_bath != 0.0) h_b += p.j_x_bath * hop(i, i + 1);
  }
  constexpr int kCoupledSite = 2;  // third site of the chain
  Matrix v = p.j_z_coupling * ops::embed(dims, {{slots[0], &sigma_z},
                                                {slots[kCoupledSite], &sigma_z}});
  if (p.j_x_coupling != 0.0) v += p.j_x_coupling * hop(0, kCoupledSite);

  // Bath Hamiltonian restricted to the bath factor: H_B = 1_S (x) h_bath.
  const Index db = d / 2;
  const Matrix h_bath = h_b.topLeftCorner(db, db);
  LocalEigen system = symmetric_eigen(local_s);
  LocalEigen bath = symmetric_eigen(h_bath);
  std::vector<std::pair<std::string, double>> params = {
      {"n_sites", p.n_sites},       {"b_z_system", p.b_z_system},
      {"b_x_system", p.b_x_system}, {"b_z_bath", p.b_z_bath},
      {"b_x_bath", p.b_x_bath},     {"j_z_bath", p.j_z_bath},
      {"j_x_bath", p.j_x_bath},     {"j_z_coupling", p.j_z_coupling},
      {"j_x_coupling", p.j_x_coupling}};
  HamiltonianPair out = finish(ModelKind::kSpinHalfChain, std::move(params), dims, h_s + h_b, v,
                               std::move(system), std::move(bath), false, opt);
  out.spin = 0.5;
  return out;
}

}  // namespace qtherm
