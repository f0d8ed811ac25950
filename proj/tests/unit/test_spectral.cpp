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

#include <Eigen/Eigenvalues>
#include <cmath>

#include "qtherm/models.hpp"
#include "qtherm/spectral.hpp"

using namespace qtherm;

TEST_SUITE("spectral") {

TEST_CASE("two-level diagonalization matches the closed form") {
  const double g = 0.3, delta = 1.0;
  const FreeBasis basis({2, 1}, (Vector(2) << 0.0, delta).finished(), Vector::Zero(1));
  Matrix h(2, 2);
  h << 0.0, g, g, delta;
  const Spectrum sp = diagonalize(h, basis);
  const double w = std::sqrt(delta * delta + 4 * g * g);
  CHECK(sp.energies()(0) == doctest::Approx((delta - w) / 2).epsilon(1e-14));
  CHECK(sp.energies()(1) == doctest::Approx((delta + w) / 2).epsilon(1e-14));
  for (Index mu = 0; mu < 2; ++mu) {
    Index big = 0;
    sp.vectors().col(mu).cwiseAbs().maxCoeff(&big);
    CHECK(sp.vectors()(big, mu) > 0.0);
  }
}

TEST_CASE("spectrum of a spin chain agrees with an independent solver") {
  SpinHalfParams p;
  p.n_sites = 6;
  const HamiltonianPair m = build_spin_half_chain(p);
  const Spectrum sp = diagonalize(m);
  Eigen::SelfAdjointEigenSolver<Matrix> ref(m.total(), Eigen::EigenvaluesOnly);
  CHECK((sp.energies() - ref.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(eigen_residual(m.total(), sp) < 1e-10);
  CHECK(orthonormality_error(sp) < 1e-10);
  // Parseval over eigenstates for each free state.
  for (Index a = 0; a < sp.dim(); ++a) {
    double sum = 0.0;
    for (Index mu = 0; mu < sp.dim(); ++mu) sum += sp.coefficient(mu, a) * sp.coefficient(mu, a);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("to_eigenbasis is a similarity transform") {
  BlbqParams p;
  p.n_sites = 2;
  p.spin = 1.0;
  const HamiltonianPair m = build_blbq_chain(p);
  const Spectrum sp = diagonalize(m);
  const Matrix h_eig = sp.to_eigenbasis(m.total());
  CHECK((h_eig - Matrix(sp.energies().asDiagonal())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("kernel density integrates to the level count") {
  Vector levels = Vector::LinSpaced(200, 0.0, 100.0);
  const DosEstimate d = estimate_dos(levels, 2.0);
  CHECK(d.integral() == doctest::Approx(200.0).epsilon(1e-3));
  // Uniform comb with spacing 100/199 in the bulk.
  const KernelDensity k(levels, 2.0);
  CHECK(k(50.0) == doctest::Approx(199.0 / 100.0).epsilon(1e-3));
}

TEST_CASE("default bandwidth is five mean spacings over the central window") {
  const Vector levels = Vector::LinSpaced(101, 0.0, 10.0);
  CHECK(default_bandwidth(levels) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("window count density counts levels") {
  const Vector levels = Vector::LinSpaced(11, 0.0, 10.0);
  CHECK(window_count_density(levels, 5.0, 2.5) == doctest::Approx(5.0 / 5.0));
}

}
