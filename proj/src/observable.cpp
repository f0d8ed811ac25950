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

#include "qtherm/observable.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

namespace qtherm {

int Observable::outcome_index(double value) const {
  for (size_t k = 0; k < outcomes.size(); ++k) {
    if (std::abs(outcomes[k] - value) < 1e-9) return static_cast<int>(k);
  }
  return -1;
}

namespace {

constexpr double kGroupTol = 1e-9;

struct Eigenspaces {
  std::vector<double> values;
  std::vector<Matrix> vectors;
};

// Groups the spectrum of a small symmetric matrix into distinct eigenvalues.
Eigenspaces decompose_local(const Matrix& op) {
  const Index d = op.rows();
  Vector vals;
  Matrix vecs;
  Matrix off = op;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() == 0.0) {
    std::vector<Index> order(static_cast<size_t>(d));
    for (Index k = 0; k < d; ++k) order[static_cast<size_t>(k)] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return op(a, a) < op(b, b); });
    vals.resize(d);
    vecs = Matrix::Zero(d, d);
    for (Index k = 0; k < d; ++k) {
      vals(k) = op(order[static_cast<size_t>(k)], order[static_cast<size_t>(k)]);
      vecs(order[static_cast<size_t>(k)], k) = 1.0;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(op);
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
    ops::fix_column_signs(vecs);
  }
  Eigenspaces out;
  Index start = 0;
  while (start < d) {
    Index stop = start + 1;
    while (stop < d && vals(stop) - vals(start) < kGroupTol) ++stop;
    out.values.push_back(vals.segment(start, stop - start).mean());
    out.vectors.push_back(vecs.middleCols(start, stop - start));
    start = stop;
  }
  return out;
}

bool is_diagonal(const Matrix& m) {
  Matrix off = m;
  off.diagonal().setZero();
  return off.size() == 0 || off.cwiseAbs().maxCoeff() < 1e-12;
}

// O = O_S (x) 1_B with O_S given in the computational site basis.
Observable local_observable(const HamiltonianPair& model, const std::string& name,
                            const Matrix& op_comp) {
  const Matrix op_free = model.frame_system.transpose() * op_comp * model.frame_system;
  const Eigenspaces es = decompose_local(0.5 * (op_free + op_free.transpose()));
  const Index db = model.basis.bath_dim();
  const Matrix id_b = Matrix::Identity(db, db);
  Observable out;
  out.name = name;
  out.system_local = true;
  out.matrix = ops::kron(op_free, id_b);
  out.diagonal_in_free_basis = is_diagonal(op_free);
  out.outcomes = es.values;
  for (const Matrix& u : es.vectors) out.bases.push_back(ops::kron(u, id_b));
  return out;
}

Observable global_sz(const HamiltonianPair& model, const std::string& name) {
  const auto& dims = model.basis.site_dims();
  const Index d = model.dim();
  Vector diag(d);
  for (Index p = 0; p < d; ++p) {
    Index rest = p;
    double m = 0.0;
    for (auto it = dims.rbegin(); it != dims.rend(); ++it) {
      m += -model.spin + static_cast<double>(rest % *it);
      rest /= *it;
    }
    diag(p) = m;
  }
  std::map<long long, std::vector<Index>> groups;  // keyed by 2m
  for (Index p = 0; p < d; ++p) groups[std::llround(2 * diag(p))].push_back(p);
  const Matrix w = model.frame();
  Observable out;
  out.name = name;
  out.matrix = w.transpose() * diag.asDiagonal() * w;
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  out.diagonal_in_free_basis = is_diagonal(out.matrix);
  for (const auto& [twice_m, members] : groups) {
    Matrix q(d, static_cast<Index>(members.size()));
    for (size_t c = 0; c < members.size(); ++c) {
      q.col(static_cast<Index>(c)) = w.row(members[c]).transpose();
    }
    out.outcomes.push_back(0.5 * static_cast<double>(twice_m));
    out.bases.push_back(std::move(q));
  }
  return out;
}

Observable system_projector(const HamiltonianPair& model, const std::string& name, Index k) {
  const Index ds = model.basis.system_dim();
  require(k >= 0 && k < ds, "projector index outside the system dimension");
  Matrix op = Matrix::Zero(ds, ds);
  op(k, k) = 1.0;
  // Already in the free system basis, so bypass the frame rotation.
  HamiltonianPair trivial_frame;
  trivial_frame.frame_system = Matrix::Identity(ds, ds);
  trivial_frame.basis = model.basis;
  return local_observable(trivial_frame, name, op);
}

}  // namespace

std::vector<std::string> observable_names(ModelKind kind) {
  switch (kind) {
    case ModelKind::kOscillatorChain: return {"position_site_1", "projector:<k>"};
    case ModelKind::kBlbqChain: return {"sz_site_1", "sz_global", "projector:<k>"};
    case ModelKind::kSpinHalfChain:
      return {"sigma_z_site_1", "sz_site_1", "sz_global", "projector:<k>"};
  }
  return {};
}

Observable build_observable(const HamiltonianPair& model, const std::string& spec) {
  const bool spin_model = model.kind != ModelKind::kOscillatorChain;
  if (spec == "position_site_1") {
    require(model.kind == ModelKind::kOscillatorChain,
            "position_site_1 is only defined for the oscillator chain");
    const Index ds = model.basis.system_dim();
    const int cutoff = static_cast<int>((ds - 1) / 2);
    Matrix x = Matrix::Zero(ds, ds);
    for (Index k = 0; k < ds; ++k) x(k, k) = static_cast<double>(k - cutoff);
    return local_observable(model, spec, x);
  }
  if (spec == "sz_site_1") {
    require(spin_model, "sz_site_1 needs a spin chain");
    return local_observable(model, spec, ops::spin_z(model.spin));
  }
  if (spec == "sigma_z_site_1") {
    require(model.kind == ModelKind::kSpinHalfChain, "sigma_z_site_1 needs the spin-1/2 chain");
    return local_observable(model, spec, 2.0 * ops::spin_z(0.5));
  }
  if (spec == "sz_global") {
    require(spin_model, "sz_global needs a spin chain");
    return global_sz(model, spec);
  }
  const std::string prefix = "projector:";
  if (spec.rfind(prefix, 0) == 0) {
    Index k = 0;
    try {
      k = std::stol(spec.substr(prefix.size()));
    } catch (const std::exception&) {
      throw DomainError("malformed projector spec '" + spec + "'");
    }
    return system_projector(model, spec, k);
  }
  throw DomainError("unknown observable '" + spec + "'");
}

}  // namespace qtherm
