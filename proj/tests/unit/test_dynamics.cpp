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
#include "qtherm/spectral.hpp"

using namespace qtherm;

TEST_SUITE("dynamics") {

TEST_CASE("Rabi oscillation of a driven two-level system") {
  const double g = 0.25, delta = 0.7;
  const FreeBasis basis({2, 1}, (Vector(2) << 0.0, delta).finished(), Vector::Zero(1));
  Matrix h(2, 2);
  h << 0.0, g, g, delta;
  const Spectrum sp = diagonalize(h, basis);
  Matrix o = Matrix::Zero(2, 2);
  o(0, 0) = 1.0;
  o(1, 1) = -1.0;
  const Vector t = linear_time_grid(20.0, 201);
  const EvolutionSeries s = evolve_expectation(sp, free_state(2, 0), sp.to_eigenbasis(o), t);
  const double w = std::sqrt(delta * delta + 4 * g * g);
  for (Index i = 0; i < t.size(); ++i) {
    const double sn = std::sin(w * t(i) / 2);
    CHECK(s.values(i) == doctest::Approx(1.0 - 8.0 * g * g / (w * w) * sn * sn).epsilon(1e-10));
  }
}

TEST_CASE("free evolution keeps a diagonal observable constant") {
  const FreeBasis basis({3, 1}, (Vector(3) << 0.0, 1.0, 2.5).finished(), Vector::Zero(1));
  const Matrix h = Matrix(basis.energies().asDiagonal());
  const Spectrum sp = diagonalize(h, basis);
  const Matrix o = Matrix((Vector(3) << -1.0, 0.0, 1.0).finished().asDiagonal());
  const EvolutionSeries s =
      evolve_expectation(sp, free_state(3, 2), sp.to_eigenbasis(o), log_time_grid(0.01, 100.0, 50));
  CHECK((s.values.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("time grids") {
  const Vector lg = log_time_grid(1e-2, 200.0, 400);
  CHECK(lg.size() == 400);
  CHECK(lg(0) == 0.0);  // t = 0 leads, then log spacing
  CHECK(lg(1) == doctest::Approx(1e-2));
  CHECK(lg(399) == doctest::Approx(200.0));
  CHECK(lg(2) / lg(1) == doctest::Approx(lg(399) / lg(398)));
  const Vector ln = linear_time_grid(10.0, 11);
  CHECK(ln(0) == 0.0);
  CHECK(ln(10) == doctest::Approx(10.0));
}

TEST_CASE("decay fit recovers a synthetic exponential") {
  const Vector t = log_time_grid(1e-2, 100.0, 300);
  const double gamma = 0.12, a = 1.7, b = 0.3;
  Vector y(t.size());
  for (Index i = 0; i < t.size(); ++i) y(i) = a * std::exp(-2 * gamma * t(i)) + b;
  const DecayFit f = fit_decay(t, y, 0.0, 100.0);
  REQUIRE(f.ok);
  CHECK(f.gamma == doctest::Approx(gamma).epsilon(1e-6));
  CHECK(f.amplitude == doctest::Approx(a).epsilon(1e-6));
  CHECK(f.o_end == doctest::Approx(b).epsilon(1e-6));
  CHECK(f.residual < 1e-8);
  const DecayFit fa = fit_decay_auto(t, y, 1e-3);
  REQUIRE(fa.ok);
  CHECK(fa.gamma == doctest::Approx(gamma).epsilon(1e-4));
}

TEST_CASE("fixed-offset fit is well posed on a short record") {
  // Less than one e-fold: the free offset trades off against Gamma.
  const Vector t = linear_time_grid(5.0, 51);
  const double gamma = 0.02;
  Vector y(t.size());
  for (Index i = 0; i < t.size(); ++i) y(i) = 3.0 * std::exp(-2 * gamma * t(i));
  const DecayFit f = fit_decay_fixed_offset(t, y, 0.0, 0.0, 5.0);
  REQUIRE(f.ok);
  CHECK(f.gamma == doctest::Approx(gamma).epsilon(1e-6));
  CHECK(f.amplitude == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(f.o_end == 0.0);
}

TEST_CASE("DOS from fluctuations inverts delta^2 = sigma^2 / (4 pi D Gamma)") {
  const double sigma2 = 0.8, gamma = 0.05, dos = 37.0;
  const double delta2 = sigma2 / (4 * M_PI * dos * gamma);
  CHECK(dos_from_fluctuations(sigma2, delta2, gamma) == doctest::Approx(dos));
}

TEST_CASE("fluctuations of a two-level system") {
  // psi0 = free state 0; populations cos^2, sin^2 of the mixing angle.
  const double g = 0.4, delta = 1.0;
  const FreeBasis basis({2, 1}, (Vector(2) << 0.0, delta).finished(), Vector::Zero(1));
  Matrix h(2, 2);
  h << 0.0, g, g, delta;
  const Spectrum sp = diagonalize(h, basis);
  Matrix o = Matrix::Zero(2, 2);
  o(0, 0) = 1.0;
  o(1, 1) = -1.0;
  const Matrix oe = sp.to_eigenbasis(o);
  const FluctuationReport r = equilibrium_fluctuations(sp, free_state(2, 0), oe, 0.1);
  const Vector c = sp.vectors().row(0).transpose();
  double o_inf = 0.0;
  for (Index mu = 0; mu < 2; ++mu) o_inf += c(mu) * c(mu) * oe(mu, mu);
  CHECK(r.o_infinity == doctest::Approx(o_inf).epsilon(1e-12));
  // Time variance of <O(t)> = 2 c0^2 c1^2 O01^2 for a single off-diagonal pair.
  const double d2 = 2.0 * std::pow(c(0) * c(1) * oe(0, 1), 2);
  CHECK(r.delta2 == doctest::Approx(d2).epsilon(1e-10));
}

}
