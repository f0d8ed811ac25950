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

#include "qtherm/rmt.hpp"
#include "qtherm/rng.hpp"

using namespace qtherm;

namespace {

Vector draw_distribution(std::uint64_t seed, Index d) {
  Rng rng = make_rng(seed, 0);
  Vector p(d);
  for (Index i = 0; i < d; ++i) p(i) = -std::log(1.0 - NormalSampler::uniform(rng));
  return p / p.sum();
}

}  // namespace

TEST_SUITE("rmt_oracle") {

TEST_CASE("Markov kernel limits and normalization") {
  const Vector p = draw_distribution(3, 7);
  const Matrix k0 = markov_kernel(p, 0.4, 0.0);
  CHECK((k0 - Matrix::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-15);
  const Matrix k = markov_kernel(p, 0.4, 1.3);
  CHECK((k.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK((p.transpose() * k - p.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(k.minCoeff() >= 0.0);
  // Closed form entries: K(s, f) = e^{-2 G t} delta + (1 - e^{-2 G t}) p_f.
  const double e = std::exp(-2 * 0.4 * 1.3);
  CHECK(k(2, 2) == doctest::Approx(e + (1 - e) * p(2)));
  CHECK(k(2, 5) == doctest::Approx((1 - e) * p(5)));
  const Matrix late = markov_kernel(p, 0.4, 200.0);
  CHECK((late.rowwise() - p.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Chapman-Kolmogorov composition") {
  const Vector p = draw_distribution(5, 7);
  CHECK(chapman_kolmogorov_error(p, 0.3, 0.3, 0.0, 1.1, 2.9) < 1e-14);
  // Different rates on the two legs do not compose.
  CHECK(chapman_kolmogorov_error(p, 0.3, 0.9, 0.0, 1.1, 2.9) > 1e-3);
  std::vector<TimeTriple> tt = {{0.0, 0.5, 1.0}, {1.0, 3.0, 7.5}, {0.2, 0.2, 0.9}};
  CHECK(chapman_kolmogorov_check(p, 1.7, tt) < 1e-14);
}

TEST_CASE("Shannon entropy") {
  CHECK(shannon_entropy(Vector::Constant(7, 1.0 / 7)) == doctest::Approx(std::log(7.0)));
  Vector delta = Vector::Zero(4);
  delta(1) = 1.0;
  CHECK(shannon_entropy(delta) == 0.0);
}

TEST_CASE("entropy curve from a delta to the uniform distribution") {
  Vector p0 = Vector::Zero(7);
  p0(3) = 1.0;
  const Vector times = Vector::LinSpaced(400, 0.0, 50.0);
  const EntropyCurve c = predicted_entropy_curve(p0, Vector::Constant(7, 1.0 / 7), 1.0, times);
  CHECK(c.entropy(0) == 0.0);
  CHECK(std::abs(c.entropy(399) - std::log(7.0)) < 1e-9);
  CHECK(c.non_decreasing);
}

TEST_CASE("entropy decreases when the start outcome is rare at equilibrium") {
  // ln p_inf(s0) + S(p_inf) < 0 makes the late-time slope negative.
  Vector p0 = Vector::Zero(2);
  p0(0) = 1.0;
  const Vector p_inf = (Vector(2) << 0.05, 0.95).finished();
  CHECK(std::log(p_inf(0)) + shannon_entropy(p_inf) < 0.0);
  const EntropyCurve c = predicted_entropy_curve(p0, p_inf, 1.0, Vector::LinSpaced(200, 0.0, 20.0));
  CHECK_FALSE(c.non_decreasing);
  // Starting on the likely outcome the curve is monotone.
  Vector p1 = Vector::Zero(2);
  p1(1) = 1.0;
  CHECK(predicted_entropy_curve(p1, p_inf, 1.0, Vector::LinSpaced(200, 0.0, 20.0)).non_decreasing);
}

TEST_CASE("Lorentzian envelope integrates to omega0") {
  LorentzianEnvelope env{0.5, 2.0, 0.0};
  double sum = 0.0;
  const double h = 1e-3;
  for (double x = -2000.0; x <= 2000.0; x += h) sum += env(x) * h;
  CHECK(sum == doctest::Approx(2.0).epsilon(2e-3));
  CHECK(env(0.0) == doctest::Approx(2.0 / (M_PI * 0.5)));
}

TEST_CASE("microcanonical weights are normalized Lorentzian weights") {
  const FreeBasis basis({3, 2}, (Vector(3) << 0.0, 1.0, 2.0).finished(),
                        (Vector(2) << 0.0, 0.5).finished());
  const MicrocanonicalWeights w = microcanonical_weights(basis, 1.0, 0.3);
  CHECK(w.weights.sum() == doctest::Approx(1.0));
  // Weights fall off with |E_alpha - E|.
  CHECK(w.weights(basis.product_index(1, 0)) > w.weights(basis.product_index(2, 1)));
  CHECK(microcanonical_average(Vector::Constant(6, 4.2), w) == doctest::Approx(4.2));
}

TEST_CASE("Einstein relation is exact for an exponential bath density") {
  const double beta = 0.05, mass = 2.0;
  const Vector s = Vector::LinSpaced(121, -60.0, 60.0);
  const Vector eps = (0.5 * mass * s.array().square()).matrix();
  auto bath = [beta](double e) { return std::exp(beta * e); };
  const SystemDistribution d = system_distribution(bath, eps, s, eps.maxCoeff(), 1.0, mass);
  CHECK(d.beta == doctest::Approx(beta).epsilon(1e-9));
  const EinsteinReport r = einstein_check(d);
  CHECK_FALSE(r.flagged);
  CHECK(r.relative_deviation < 1e-6);
}

TEST_CASE("chaotic ensemble reproduces its envelope") {
  const Matrix lambda = lorentzian_envelope_matrix(101, 1.0, 5.0);
  const ChaoticEnsemble ens(lambda, 50, 2, Orthogonalization::kPreserveNorms);
  const Matrix a = ens.sample(9, 0);
  const Matrix b = ens.sample(9, 0);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);  // deterministic per (seed, member)
  // Rows of the block are mutually orthogonal.
  CHECK(std::abs(a.row(0).dot(a.row(1))) < 1e-12);
  const EnsembleSummary s = run_chaotic_ensemble(ens, 2000, 4, 20, {}, 1);
  for (Index i = 0; i < s.variance.offsets.size(); ++i) {
    CHECK(std::abs(s.variance.empirical(i) - s.variance.predicted(i)) <= 5.0 * s.variance.std_error(i));
  }
}

TEST_CASE("invalid distributions are rejected") {
  CHECK_THROWS_AS(markov_kernel((Vector(2) << 0.7, 0.7).finished(), 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(markov_kernel((Vector(2) << 0.5, 0.5).finished(), -1.0, 1.0), DomainError);
}

}
