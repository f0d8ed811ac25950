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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace qtherm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed for item `index` of a run seeded with `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::uint64_t index) {
  return Rng(derive_seed(base, index));
}

// Standard normal by Box-Muller on 53-bit uniforms; unlike
// std::normal_distribution the stream is identical across standard libraries.
class NormalSampler {
 public:
  double operator()(Rng& rng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  static double uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Runs body(chunk) for chunk in [0, n_chunks) on up to `threads` workers.
// Work assignment is static, so any per-chunk output is independent of the
// thread count.
inline void parallel_chunks(std::int64_t n_chunks, int threads,
                            const std::function<void(std::int64_t)>& body) {
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(n_chunks)));
  if (n == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) body(c);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  for (int w = 0; w < n; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::int64_t c = w; c < n_chunks; c += n) body(c);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace qtherm
