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

#include "qtherm/ou.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "qtherm/rng.hpp"

namespace qtherm {

Index OuParams::n_steps() const {
  return static_cast<Index>(std::llround(t_final / dt_step));
}

void OuParams::validate() const {
  require(k > 0.0 && gamma_friction > 0.0, "spring constant and friction must be positive");
  require(diffusion >= 0.0, "diffusion constant must be non-negative");
  require(dt_step > 0.0 && t_final > 0.0, "step and horizon must be positive");
  require(dt_step < gamma_friction / (5.0 * k), "integrator step violates dt < gamma / (5 k)");
  require(n_steps() >= 1, "horizon shorter than one step");
}

double ou_mean(const OuParams& p, double t) { return p.x0 * std::exp(-p.rate() * t); }

double ou_variance(const OuParams& p, double t) {
  return ou_stationary_variance(p) * (1.0 - std::exp(-2.0 * p.rate() * t));
}

double ou_stationary_variance(const OuParams& p) { return p.diffusion * p.gamma_friction / p.k; }

namespace {

constexpr Index kPathChunk = 256;

std::vector<Index> record_steps(Index n_steps, Index n_records) {
  require(n_records >= 2, "need at least two record points");
  std::vector<Index> out(static_cast<size_t>(n_records));
  for (Index i = 0; i < n_records; ++i) {
    out[static_cast<size_t>(i)] = static_cast<Index>(
        std::llround(static_cast<double>(i) * static_cast<double>(n_steps) / static_cast<double>(n_records - 1)));
  }
  return out;
}

// step(x, rng, normal) advances one integrator step.
template <typename Step>
OuPathStats run_paths(const OuParams& p, Index n_paths, std::uint64_t seed, Index n_records,
                      int threads, Step step) {
  p.validate();
  require(n_paths >= 2, "need at least two paths");
  const Index n_steps = p.n_steps();
  const auto rec = record_steps(n_steps, n_records);
  const Index n_chunks = (n_paths + kPathChunk - 1) / kPathChunk;
  std::vector<Vector> s1(static_cast<size_t>(n_chunks)), s2(static_cast<size_t>(n_chunks));
  OuPathStats out;
  out.final_positions.resize(n_paths);
  parallel_chunks(n_chunks, threads, [&](std::int64_t c) {
    Vector a = Vector::Zero(n_records);
    Vector b = Vector::Zero(n_records);
    for (Index i = c * kPathChunk; i < std::min(n_paths, (c + 1) * kPathChunk); ++i) {
      Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
      NormalSampler normal;
      double x = p.x0;
      size_t r = 0;
      for (Index s = 0; s <= n_steps; ++s) {
        if (s > 0) x = step(x, rng, normal);
        while (r < rec.size() && rec[r] == s) {
          a(static_cast<Index>(r)) += x;
          b(static_cast<Index>(r)) += x * x;
          ++r;
        }
      }
      out.final_positions(i) = x;
    }
    s1[static_cast<size_t>(c)] = a;
    s2[static_cast<size_t>(c)] = b;
  });
  Vector a = Vector::Zero(n_records);
  Vector b = Vector::Zero(n_records);
  for (Index c = 0; c < n_chunks; ++c) {
    a += s1[static_cast<size_t>(c)];
    b += s2[static_cast<size_t>(c)];
  }
  const double n = static_cast<double>(n_paths);
  out.times.resize(n_records);
  for (Index i = 0; i < n_records; ++i) out.times(i) = static_cast<double>(rec[static_cast<size_t>(i)]) * p.dt_step;
  out.mean = a / n;
  out.variance = ((b / n).array() - out.mean.array().square()) * (n / (n - 1.0));
  return out;
}

}  // namespace

OuPathStats simulate_ou(const OuParams& p, Index n_paths, std::uint64_t seed, Index n_records,
                        int threads) {
  const double a = p.rate() * p.dt_step;
  const double noise = std::sqrt(2.0 * p.diffusion * p.dt_step);
  return run_paths(p, n_paths, seed, n_records, threads,
                   [=](double x, Rng& rng, NormalSampler& normal) {
                     return x - a * x + noise * normal(rng);
                   });
}

OuPathStats sample_ou_exact(const OuParams& p, Index n_paths, std::uint64_t seed,
                            Index n_records, int threads) {
  const double decay = std::exp(-p.rate() * p.dt_step);
  const double noise = std::sqrt(ou_stationary_variance(p) * (1.0 - decay * decay));
  return run_paths(p, n_paths, seed, n_records, threads,
                   [=](double x, Rng& rng, NormalSampler& normal) {
                     return x * decay + noise * normal(rng);
                   });
}

ShakenOuResult simulate_shaken_ou(const OuParams& p, double v_std, Index n_paths,
                                  std::uint64_t seed, double burn_in, int threads) {
  p.validate();
  require(v_std >= 0.0, "drift spread must be non-negative");
  require(n_paths >= 2, "need at least two paths");
  require(burn_in >= 0.0 && burn_in < p.t_final, "burn-in must lie inside the horizon");
  const Index n_steps = p.n_steps();
  const Index first = static_cast<Index>(std::ceil(burn_in / p.dt_step));
  const double noise = std::sqrt(2.0 * p.diffusion * p.dt_step);
  ShakenOuResult out;
  out.path_means.resize(n_paths);
  out.drifts.resize(n_paths);
  const Index n_chunks = (n_paths + kPathChunk - 1) / kPathChunk;
  parallel_chunks(n_chunks, threads, [&](std::int64_t c) {
    for (Index i = c * kPathChunk; i < std::min(n_paths, (c + 1) * kPathChunk); ++i) {
      Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
      NormalSampler normal;
      const double v = v_std * normal(rng);
      double x = p.x0;
      double acc = 0.0;
      for (Index s = 1; s <= n_steps; ++s) {
        x += (v - p.rate() * x) * p.dt_step + noise * normal(rng);
        if (s >= first) acc += x;
      }
      out.drifts(i) = v;
      out.path_means(i) = acc / static_cast<double>(n_steps - first + 1);
    }
  });
  const double n = static_cast<double>(n_paths);
  const double mean = out.path_means.mean();
  const Vector dev = out.path_means.array() - mean;
  out.delta_x2 = dev.squaredNorm() / (n - 1.0);
  // SE of a sample variance: sqrt((m4 - s^4) / n)
  const double m4 = dev.array().pow(4).mean();
  out.delta_x2_se = std::sqrt(std::max(0.0, m4 - out.delta_x2 * out.delta_x2) / n);
  out.predicted = v_std * v_std / (p.rate() * p.rate());
  const double span = static_cast<double>(n_steps - first + 1) * p.dt_step;
  out.noise_floor = 2.0 * p.diffusion / (p.rate() * p.rate() * span);
  return out;
}

OuMapping ou_mapping(double sigma2, double delta2, double gamma, double dos) {
  require(gamma > 0.0 && dos > 0.0, "decay rate and density of states must be positive");
  OuMapping m;
  m.v2 = sigma2 * gamma / (4.0 * std::numbers::pi * dos);
  m.relaxation_rate = gamma;
  m.delta_x2 = m.v2 / (gamma * gamma);
  m.delta2 = delta2;
  m.ratio = delta2 > 0.0 ? m.delta_x2 / delta2 : 0.0;
  return m;
}

}  // namespace qtherm
