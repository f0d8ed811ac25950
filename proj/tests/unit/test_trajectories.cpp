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

#include <doctest.h>

#include <cmath>

#include "qtherm/dynamics.hpp"
#include "qtherm/models.hpp"
#include "qtherm/observable.hpp"
#include "qtherm/rmt.hpp"
#include "qtherm/spectral.hpp"
#include "qtherm/trajectories.hpp"

using namespace qtherm;

namespace {

struct Small {
  HamiltonianPair model;
  Spectrum spectrum;
  Observable obs;
};

Small small_oscillator() {
  OscillatorParams p;
  p.n_sites = 3;
  p.spin_cutoff = 2;
  Small s;
  s.model = build_oscillator_chain(p);
  s.spectrum = diagonalize(s.model);
  s.obs = build_observable(s.model, "position_site_1");
  return s;
}

}  // namespace

TEST_SUITE("trajectories") {

TEST_CASE("position observable has one outcome per site level") {
  const Small s = small_oscillator();
  CHECK(s.obs.n_outcomes() == 5);
  Index total = 0;
  for (size_t k = 0; k < s.obs.n_outcomes(); ++k) total += s.obs.rank(k);
  CHECK(total == s.model.dim());
  Matrix sum = Matrix::Zero(s.model.dim(), s.model.dim());
  for (size_t k = 0; k < s.obs.n_outcomes(); ++k) sum += s.obs.projector(k);
  CHECK((sum - Matrix::Identity(s.model.dim(), s.model.dim())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trajectories are reproducible and thread-count independent") {
  const Small s = small_oscillator();
  TrajectoryEngine eng(s.spectrum, s.obs);
  eng.set_dt(0.7);
  const Vector psi = free_state(s.model.dim(), select_mid_spectrum_max(s.model.basis, s.obs));
  const auto a = eng.run(psi, 20, 16, 77, 1);
  const auto b = eng.run(psi, 20, 16, 77, 3);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].outcome_index == b[i].outcome_index);
    CHECK((a[i].energies - b[i].energies).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a[i].max_probability_defect < 1e-10);
  }
  // The first outcome is the initial (sharp) value.
  CHECK(a[0].outcomes(0) == doctest::Approx(s.obs.max_value()));
}

TEST_CASE("classical Markov chain matches its kernel") {
  const Vector p = (Vector(4) << 0.1, 0.2, 0.3, 0.4).finished();
  const double gamma = 0.2, dt = 1.5;
  const auto rec = simulate_classical_chain(p, gamma, dt, 0, 200, 200, 13);
  Matrix counts = Matrix::Zero(4, 4);
  for (const auto& r : rec)
    for (size_t j = 0; j + 1 < r.outcome_index.size(); ++j) counts(r.outcome_index[j], r.outcome_index[j + 1]) += 1;
  const KernelComparison kc = compare_transitions(counts, markov_kernel(p, gamma, dt));
  CHECK(kc.max_abs_z < 4.5);
  CHECK((kc.empirical.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("ensemble statistics of a classical chain follow the kernel") {
  const Vector p = (Vector(3) << 0.2, 0.3, 0.5).finished();
  const std::vector<double> values = {-1.0, 0.0, 1.0};
  const double gamma = 0.3, dt = 0.5;
  const auto rec = simulate_classical_chain(p, gamma, dt, 2, 40, 4000, 21, values);
  const EnsembleStats st = summarize_ensemble(rec, values, 1.0);
  const double mean_inf = -0.2 + 0.5;
  for (Index j = 0; j < st.mean.size(); ++j) {
    const double e = std::exp(-2 * gamma * st.times(j));
    const double exact = e * 1.0 + (1 - e) * mean_inf;
    CHECK(std::abs(st.mean(j) - exact) <= 5.0 * std::max(st.std_error(j), 1e-3));
  }
  REQUIRE(st.gamma_qj.has_value());
  CHECK(*st.gamma_qj == doctest::Approx(gamma).epsilon(0.1));
}

TEST_CASE("single-trajectory entropy of a constant record is zero") {
  TrajectoryRecord r;
  r.dt = 1.0;
  r.outcome_index.assign(50, 2);
  r.outcomes = Vector::Constant(50, 1.0);
  CHECK(single_trajectory_entropy(r, 5, 0.0) == 0.0);
}

TEST_CASE("transition z-scores vanish for exact frequencies") {
  const Vector p = (Vector(3) << 0.25, 0.25, 0.5).finished();
  const Matrix k = markov_kernel(p, 1.0, 0.4);
  const Matrix counts = 1000.0 * k;
  CHECK(compare_transitions(counts, k).max_abs_z < 1e-9);
}

}
