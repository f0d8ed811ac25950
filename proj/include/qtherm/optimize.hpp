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

#include <cmath>
#include <functional>

namespace qtherm {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  bool at_boundary = false;
};

/// Global scan on a uniform grid followed by golden-section refinement
/// around the best grid point. Suited to smooth one-parameter residuals
/// that may have several shallow local minima.
inline ScalarMinimum minimize_scan_golden(const std::function<double(double)>& f, double lo,
                                          double hi, int n_scan, double tol = 1e-10) {
  const double step = (hi - lo) / static_cast<double>(n_scan - 1);
  int best = 0;
  double best_val = f(lo);
  for (int i = 1; i < n_scan; ++i) {
    const double v = f(lo + step * i);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  ScalarMinimum out;
  out.at_boundary = (best == 0 || best == n_scan - 1);
  double a = lo + step * std::max(0, best - 1);
  double b = lo + step * std::min(n_scan - 1, best + 1);
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (std::abs(b - a) > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = f(d);
    }
  }
  out.x = 0.5 * (a + b);
  out.value = f(out.x);
  if (best_val < out.value) {
    out.x = lo + step * best;
    out.value = best_val;
  }
  return out;
}

}  // namespace qtherm
