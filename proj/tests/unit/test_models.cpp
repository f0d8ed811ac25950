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

#include "qtherm/free_basis.hpp"
#include "qtherm/models.hpp"

using namespace qtherm;

TEST_SUITE("models") {

TEST_CASE("spin operators satisfy the su(2) algebra") {
  for (double s : {0.5, 1.0, 1.5, 3.0}) {
    const Matrix z = ops::spin_z(s);
    const Matrix p = ops::spin_plus(s);
    const Matrix x = ops::spin_x(s);
    const Matrix y = ops::spin_y_imag(s);  // S_y = i Y
    const auto n = z.rows();
    CHECK(n == static_cast<Index>(2 * s + 1));
    // [S_z, S_+] = S_+
    CHECK(((z * p - p * z) - p).cwiseAbs().maxCoeff() < 1e-12);
    // S_x^2 + S_y^2 + S_z^2 = S(S+1), with S_y^2 = -Y^2
    const Matrix casimir = x * x - y * y + z * z;
    CHECK((casimir - s * (s + 1) * Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("kron matches the block definition") {
  Matrix a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 0, 5, 6, 7;
  const Matrix k = ops::kron(a, b);
  REQUIRE(k.rows() == 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK((k.block(2 * i, 2 * j, 2, 2) - a(i, j) * b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("free basis maps are inverse and energy ordered") {
  Vector sys(3), bath(2);
  sys << 0.0, 2.0, 1.0;
  bath << 0.5, 0.0;
  const FreeBasis basis({3, 2}, sys, bath);
  REQUIRE(basis.dim() == 6);
  const Vector sorted = basis.sorted_energies();
  for (Index a = 0; a < basis.dim(); ++a) {
    CHECK(basis.alpha_of(basis.product_of(a)) == a);
    CHECK(basis.energies()(basis.product_of(a)) == sorted(a));
    if (a > 0) CHECK(sorted(a) >= sorted(a - 1));
  }
  CHECK(basis.energies()(basis.product_index(1, 0)) == doctest::Approx(2.5));
}

TEST_CASE("model Hamiltonians are real symmetric with the expected dimension") {
  OscillatorParams op;
  op.n_sites = 3;
  op.spin_cutoff = 1;
  BlbqParams bp;
  bp.n_sites = 2;
  bp.spin = 1.0;
  SpinHalfParams sp;
  sp.n_sites = 5;
  const HamiltonianPair models[] = {build_oscillator_chain(op), build_blbq_chain(bp),
                                    build_spin_half_chain(sp)};
  const Index dims[] = {27, 9, 32};
  for (int i = 0; i < 3; ++i) {
    const auto& m = models[i];
    CHECK(m.dim() == dims[i]);
    CHECK(m.basis.dim() == m.dim());
    const Matrix h = m.total();
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    // The free part is diagonal in the free basis and V carries the rest.
    CHECK((h.diagonal() - m.h0 - m.v.diagonal()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((m.h0 - m.basis.energies()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("dimension cap is enforced") {
  OscillatorParams op;
  BuildOptions opt;
  opt.max_dim = 100;
  CHECK_THROWS_AS(build_oscillator_chain(op, opt), DomainError);
}

TEST_CASE("fix_column_signs makes the largest component positive") {
  Matrix v(2, 2);
  v << -0.8, 0.6, 0.6, 0.8;
  ops::fix_column_signs(v);
  CHECK(v(0, 0) == doctest::Approx(0.8));
  CHECK(v(1, 0) == doctest::Approx(-0.6));
  CHECK(v(1, 1) == doctest::Approx(0.8));
}

}
