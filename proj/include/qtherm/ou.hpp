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

#pragma once

#include <cstdint>

#include "qtherm/common.hpp"

namespace qtherm {

/// Overdamped Langevin dynamics dx = -(k/gamma) x dt + sqrt(2 D) dW (trap centre 0).
struct OuParams {
  double k = 1.0;
  double gamma_friction = 1.0;
  double diffusion = 0.5;
  double x0 = 0.0;
  double dt_step = 0.01;
  double t_final = 10.0;

  double rate() const { return k / gamma_friction; }
  Index n_steps() const;
  void validate() const;  // includes the Euler-Maruyama margin dt < gamma / (5 k)
};

struct OuPathStats {
  Vector times;
  Vector mean;
  Vector variance;
  Vector final_positions;
};

double ou_mean(const OuParams& p, double t);
double ou_variance(const OuParams& p, double t);
double ou_stationary_variance(const OuParams& p);  // D gamma / k

// Euler-Maruyama; moments recorded at n_records evenly spaced steps.
OuPathStats simulate_ou(const OuParams& p, Index n_paths, std::uint64_t seed,
                        Index n_records = 101, int threads = 1);
// Exact Gaussian transition sampler on the same time grid (the oracle).
OuPathStats sample_ou_exact(const OuParams& p, Index n_paths, std::uint64_t seed,
                            Index n_records = 101, int threads = 1);

struct ShakenOuResult {
  Vector path_means;  // time average of x over [burn_in, t_final]
  Vector drifts;      // v per path
  double delta_x2 = 0.0;     // variance of the path means
  double delta_x2_se = 0.0;
  double predicted = 0.0;    // v_std^2 gamma^2 / k^2
  double noise_floor = 0.0;  // leading white-noise contribution 2 D gamma^2 / (k^2 T)
};

// Every path gets a constant drift v ~ N(0, v_std^2):
// dx = (-(k/gamma) x + v) dt + sqrt(2 D) dW.
ShakenOuResult simulate_shaken_ou(const OuParams& p, double v_std, Index n_paths,
                                  std::uint64_t seed, double burn_in, int threads = 1);

/// Drift variance and relaxation rate that give an OU time-fluctuation
/// equal to the quantum one: v^2 = sigma2 Gamma / (4 pi D), k / gamma = Gamma.
struct OuMapping {
  double v2 = 0.0;
  double relaxation_rate = 0.0;
  double delta_x2 = 0.0;   // v^2 / rate^2
  double delta2 = 0.0;     // quantum time fluctuation it is compared with
  double ratio = 0.0;      // delta_x2 / delta2
};

OuMapping ou_mapping(double sigma2, double delta2, double gamma, double dos);

}  // namespace qtherm
