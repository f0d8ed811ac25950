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

#include "qtherm/ou.hpp"

using namespace qtherm;

TEST_SUITE("ou_reference") {

TEST_CASE("closed-form moments") {
  OuParams p;
  p.k = 2.0;
  p.gamma_friction = 4.0;
  p.diffusion = 0.3;
  p.x0 = 1.5;
  const double a = 0.5;
  CHECK(ou_mean(p, 2.0) == doctest::Approx(1.5 * std::exp(-a * 2.0)));
  CHECK(ou_variance(p, 2.0) == doctest::Approx(0.3 / a * (1 - std::exp(-2 * a * 2.0))));
  CHECK(ou_stationary_variance(p) == doctest::Approx(0.3 * 4.0 / 2.0));
  CHECK(ou_variance(p, 0.0) == 0.0);
}

TEST_CASE("zero diffusion gives the deterministic Euler path") {
  OuParams p;
  p.diffusion = 0.0;
  p.x0 = 2.0;
  p.dt_step = 0.01;
  p.t_final = 1.0;
  const OuPathStats s = simulate_ou(p, 8, 1, 11);
  const double expected = 2.0 * std::pow(1.0 - p.rate() * p.dt_step, 100);
  CHECK(s.mean(10) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s.variance.cwiseAbs().maxCoeff() < 1e-14);  // chunked moment merge rounds
}

TEST_CASE("exact sampler hits the stationary variance") {
  OuParams p;
  p.diffusion = 0.5;
  p.x0 = 3.0;
  p.dt_step = 0.05;
  p.t_final = 20.0;
  const Index n = 20000;
  const OuPathStats s = sample_ou_exact(p, n, 5, 11);
  const double v = ou_stationary_variance(p);
  const double se = v * std::sqrt(2.0 / (n - 1));
  CHECK(std::abs(s.variance(10) - v) < 4.0 * se);
  CHECK(std::abs(s.mean(10)) < 4.0 * std::sqrt(v / n));
}

TEST_CASE("thread count does not change paths") {
  OuParams p;
  const OuPathStats a = simulate_ou(p, 1000, 9, 5, 1);
  const OuPathStats b = simulate_ou(p, 1000, 9, 5, 3);
  CHECK((a.final_positions - b.final_positions).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.variance - b.variance).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Euler step margin is enforced") {
  OuParams p;
  p.k = 10.0;
  p.dt_step = 0.05;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("shaken OU: constant drift shifts the time average by v / rate") {
  OuParams p;
  p.diffusion = 0.0;
  p.dt_step = 0.05;
  p.t_final = 200.0;
  const ShakenOuResult r = simulate_shaken_ou(p, 0.3, 200, 3, 20.0);
  for (Index i = 0; i < r.drifts.size(); ++i) {
    CHECK(r.path_means(i) == doctest::Approx(r.drifts(i) / p.rate()).epsilon(1e-6));
  }
  CHECK(r.predicted == doctest::Approx(0.09));
}

TEST_CASE("mapping reproduces the quantum fluctuation") {
  const double sigma2 = 0.7, gamma = 0.08, dos = 12.0;
  const double delta2 = sigma2 / (4 * M_PI * dos * gamma);
  const OuMapping m = ou_mapping(sigma2, delta2, gamma, dos);
  CHECK(m.relaxation_rate == doctest::Approx(gamma));
  CHECK(m.delta_x2 == doctest::Approx(m.v2 / (gamma * gamma)));
  CHECK(m.ratio == doctest::Approx(1.0));
}

}
