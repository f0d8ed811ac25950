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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "qtherm/experiments.hpp"
#include "qtherm/io.hpp"
#include "qtherm/rmt.hpp"
#include "qtherm/trajectories.hpp"

namespace qtherm::app {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

bool same_dt(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(b)); }

// Rows of a stacked per-dt table that belong to one dt.
std::vector<size_t> rows_for(const io::CsvData& d, double dt) {
  std::vector<size_t> out;
  for (size_t r = 0; r < d.rows.size(); ++r) {
    if (same_dt(d.number(r, "dt"), dt)) out.push_back(r);
  }
  return out;
}

class Checker {
 public:
  explicit Checker(fs::path dir) : dir_(std::move(dir)) {}

  io::CsvData csv(const std::string& name) const { return io::read_csv(dir_ / name); }
  void add(int criterion, std::string label, bool pass, std::string detail) {
    out_.push_back({criterion, std::move(label), pass, std::move(detail)});
  }
  std::vector<Verdict> take() { return std::move(out_); }

 private:
  fs::path dir_;
  std::vector<Verdict> out_;
};

void verify_evolve(Checker& c, const ExperimentConfig& cfg) {
  const auto d = c.csv("fit.csv");
  const bool ok = d.number(0, "fit_ok") == 1.0;
  const double g = d.number(0, "gamma");
  const double amp = std::abs(d.number(0, "amplitude"));
  const double res = d.number(0, "residual");
  const double frac = amp > 0.0 ? res / amp : std::numeric_limits<double>::infinity();
  c.add(4, "4a decay fit", ok && std::isfinite(g) && g > 0.0 && frac < cfg.evolve.max_residual_fraction,
        "gamma " + num(g) + ", RMS residual / amplitude " + num(frac) + " (limit " +
            num(cfg.evolve.max_residual_fraction) + ")");
  const double ratio = d.number(0, "ou_ratio");
  c.add(0, "OU mapping delta_x^2 / delta^2", std::isfinite(ratio) && ratio > 0.0,
        "ratio " + num(ratio) + " (reported, no tolerance)");
}

void verify_trajectories(Checker& c, const ExperimentConfig& cfg) {
  const auto& k = cfg.trajectories;
  const auto g = c.csv("gamma_ratio.csv");
  const auto ens = c.csv("ensemble.csv");
  const auto trans = c.csv("transitions.csv");

  auto ratio_row = [&](double dt) -> std::optional<size_t> {
    auto r = rows_for(g, dt);
    if (r.empty()) return std::nullopt;
    return r.front();
  };
  auto ratio_of = [&](size_t r) {
    const double gq = g.number(r, "gamma_qj");
    const double ge = g.number(r, "gamma_ev");
    return ge > 0.0 && std::isfinite(gq) ? gq / ge : std::nan("");
  };

  if (!k.ratio_dts.empty() || k.zeno_dt) {
    bool pass = true;
    std::string detail;
    for (double dt : k.ratio_dts) {
      const auto r = ratio_row(dt);
      const double v = r ? ratio_of(*r) : std::nan("");
      const bool in = std::isfinite(v) && v >= k.ratio_lo && v <= k.ratio_hi;
      pass = pass && in;
      detail += "dt " + num(dt) + ": " + (r ? num(v) : "not swept") + (in ? "" : " (out)") + "; ";
    }
    if (k.zeno_dt) {
      const auto r = ratio_row(*k.zeno_dt);
      const double v = r ? ratio_of(*r) : std::nan("");
      const bool slow = std::isfinite(v) && v < k.zeno_max_ratio;
      pass = pass && slow;
      detail += "Zeno dt " + num(*k.zeno_dt) + ": " + (r ? num(v) : "not swept") + (slow ? "" : " (not slowed)");
    }
    c.add(4, "4b Gamma_QJ / Gamma_EV", pass, detail);
  }

  if (!k.entropy_dts.empty()) {
    bool pass = true;
    std::string detail;
    for (double dt : k.entropy_dts) {
      const auto rows = rows_for(ens, dt);
      const auto r = ratio_row(dt);
      if (rows.empty() || !r) {
        pass = false;
        detail += "dt " + num(dt) + ": not swept; ";
        continue;
      }
      EnsembleStats st;
      st.entropy.resize(static_cast<Index>(rows.size()));
      st.entropy_se.resize(static_cast<Index>(rows.size()));
      for (size_t i = 0; i < rows.size(); ++i) {
        st.entropy(static_cast<Index>(i)) = ens.number(rows[i], "entropy");
        st.entropy_se(static_cast<Index>(i)) = ens.number(rows[i], "entropy_se");
      }
      const EntropyVerdict v = entropy_verdict(st, g.number(*r, "single_entropy"), k.entropy_n_se);
      const bool ok = v.non_decreasing && v.saturation_error < k.entropy_saturation;
      pass = pass && ok;
      detail += "dt " + num(dt) + ": worst drop " + num(v.worst_drop_in_se) + " SE, saturation error " +
                num(v.saturation_error) + "; ";
    }
    c.add(4, "4c entropy growth and saturation", pass, detail);
  }

  if (k.histories_dt) {
    const auto rows = rows_for(ens, *k.histories_dt);
    double worst = rows.empty() ? std::numeric_limits<double>::infinity() : 0.0;
    double at = 0.0;
    for (size_t r : rows) {
      const double se = ens.number(r, "std_error");
      const double diff = ens.number(r, "mean") - ens.number(r, "unmeasured");
      const double z = se > 0.0 ? diff / se : (std::abs(diff) > 1e-10 ? std::numeric_limits<double>::infinity() : 0.0);
      if (std::abs(z) > worst) {
        worst = std::abs(z);
        at = ens.number(r, "t");
      }
    }
    c.add(5, "5 consistent histories", worst <= k.histories_max_z,
          "dt " + num(*k.histories_dt) + ": max |z| " + num(worst) + " at t = " + num(at) + " (limit " +
              num(k.histories_max_z) + ")");
  }

  if (k.kernel_dt) {
    const auto rows = rows_for(trans, *k.kernel_dt);
    Index n = 0;
    for (size_t r : rows) n = std::max<Index>(n, static_cast<Index>(trans.number(r, "s_i")) + 1);
    Matrix counts = Matrix::Zero(n, n), pred = Matrix::Zero(n, n);
    for (size_t r : rows) {
      const auto i = static_cast<Index>(trans.number(r, "s_i"));
      const auto f = static_cast<Index>(trans.number(r, "s_f"));
      counts(i, f) = trans.number(r, "count");
      pred(i, f) = trans.number(r, "predicted");
    }
    const KernelComparison kc = rows.empty() ? KernelComparison{} : compare_transitions(counts, pred);
    c.add(6, "6 Markov kernel rows", !rows.empty() && kc.max_abs_z <= k.kernel_max_z,
          "dt " + num(*k.kernel_dt) + ": max |z| " + num(rows.empty() ? INFINITY : kc.max_abs_z) + " over " +
              std::to_string(n * n) + " entries (limit " + num(k.kernel_max_z) + ")");
  }

  if (k.drift_dt && k.drift_target) {
    const auto rows = rows_for(ens, *k.drift_dt);
    const auto r = ratio_row(*k.drift_dt);
    double acc = 0.0;
    Index m = 0;
    for (size_t row : rows) {
      if (ens.number(row, "j") < 1.0) continue;
      acc += ens.number(row, "energy_sigma");
      ++m;
    }
    const double range = r ? g.number(*r, "energy_range") : 0.0;
    const double value = (m > 0 && range > 0.0) ? acc / static_cast<double>(m) / range : std::nan("");
    const double q = value / *k.drift_target;
    const bool pass = std::isfinite(q) && q <= k.drift_factor && q >= 1.0 / k.drift_factor;
    c.add(9, "9 energy drift", pass,
          cfg.observable + " dt " + num(*k.drift_dt) + ": sigma_E / dE " + num(value) + " vs " +
              num(*k.drift_target) + " (factor " + num(q) + ")");
  }
}

void verify_dos(Checker& c, const ExperimentConfig& cfg) {
  const auto d = c.csv("dos.csv");
  size_t good = 0;
  for (size_t r = 0; r < d.rows.size(); ++r) {
    const double ratio = d.number(r, "dos_inferred") / d.number(r, "dos_exact");
    const bool ok = d.number(r, "ok") == 1.0 && std::isfinite(ratio) && ratio > 0.0 &&
                    std::max(ratio, 1.0 / ratio) <= cfg.dos.tolerance_factor;
    good += ok ? 1 : 0;
  }
  const double frac = d.rows.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(d.rows.size());
  c.add(7, "7 DOS measurement", !d.rows.empty() && frac >= cfg.dos.required_fraction,
        cfg.model ? to_string(cfg.model->kind) + ": " + std::to_string(good) + "/" + std::to_string(d.rows.size()) +
                        " states within factor " + num(cfg.dos.tolerance_factor) + " (need " +
                        num(cfg.dos.required_fraction) + ")"
                  : "");
}

void verify_einstein(Checker& c, const ExperimentConfig& cfg) {
  const auto& k = cfg.einstein;
  const auto d = c.csv("einstein.csv");
  Index good = 0;
  std::string devs;
  for (size_t r = 0; r < d.rows.size(); ++r) {
    const double dev = d.number(r, "deviation");
    const bool ok = d.number(r, "flagged") == 0.0 && dev < k.max_deviation;
    good += ok ? 1 : 0;
    devs += num(dev) + " ";
  }
  c.add(8, "8 Einstein relation, model states", good >= k.min_states,
        std::to_string(good) + "/" + std::to_string(d.rows.size()) + " states with |sigma^2 m beta - 1| < " +
            num(k.max_deviation) + " (need " + std::to_string(k.min_states) + "); deviations " + devs);
  const auto gsn = c.csv("einstein_gaussian.csv");
  const double s2 = gsn.number(0, "sigma2");
  const double pred = gsn.number(0, "predicted");
  const double rel = std::abs(s2 / pred - 1.0);
  c.add(8, "8 Einstein relation, Gaussian control", rel < k.gaussian_tolerance,
        "sigma^2 " + num(s2) + " vs 1/(m beta) " + num(pred) + ", relative error " + num(rel));
}

void verify_oracle(Checker& c, const ExperimentConfig& cfg, const json& manifest) {
  const auto& k = cfg.oracle;
  const auto ck = c.csv("chapman_kolmogorov.csv");
  double worst = 0.0;
  for (size_t r = 0; r < ck.rows.size(); ++r) worst = std::max(worst, ck.number(r, "error"));
  double seconds = std::numeric_limits<double>::infinity();
  if (manifest.contains("timings_s") && manifest["timings_s"].contains("chapman_kolmogorov")) {
    seconds = manifest["timings_s"]["chapman_kolmogorov"].get<double>();
  }
  c.add(1, "1 Chapman-Kolmogorov", ck.rows.size() >= static_cast<size_t>(k.n_ck_draws) &&
                                       worst <= k.ck_tolerance && seconds < 1.0,
        std::to_string(ck.rows.size()) + " draws, max error " + num(worst) + ", " + num(seconds) + " s");

  const auto ks = c.csv("kernel_suite.csv");
  double rs = 0, st = 0, id = 0, lt = 0;
  for (size_t r = 0; r < ks.rows.size(); ++r) {
    rs = std::max(rs, ks.number(r, "row_sum_error"));
    st = std::max(st, ks.number(r, "stationarity_error"));
    id = std::max(id, ks.number(r, "identity_error"));
    lt = std::max(lt, ks.number(r, "long_time_error"));
  }
  // Row sums and K(0) are exact up to rounding of the last bit.
  constexpr double kRounding = 1e-14;
  c.add(2, "2 kernel semigroup suite",
        !ks.rows.empty() && rs <= kRounding && id <= kRounding && st <= k.stationarity_tolerance &&
            lt <= k.long_time_tolerance,
        "row sums " + num(rs) + ", K(0) " + num(id) + ", stationarity " + num(st) + ", K(50/Gamma) " + num(lt));

  const auto es = c.csv("entropy_curves.csv");
  double worst_inc = 0.0, end_err = std::numeric_limits<double>::infinity();
  size_t n_random = 0;
  for (size_t r = 0; r < es.rows.size(); ++r) {
    if (es.number(r, "uniform") == 1.0) {
      end_err = std::abs(es.number(r, "s_end") - std::log(static_cast<double>(k.n_outcomes)));
    } else {
      ++n_random;
      worst_inc = std::min(worst_inc, es.number(r, "min_increment"));
    }
  }
  c.add(3, "3 entropy second law", n_random >= static_cast<size_t>(k.n_entropy_draws) &&
                                        worst_inc >= -k.entropy_tolerance && end_err <= 1e-9,
        std::to_string(n_random) + " draws, most negative increment " + num(worst_inc) +
            ", |S(inf) - ln d| " + num(end_err));

  // Exact criterion for monotone S_G with a delta start, checked draw by draw.
  size_t agree = 0, monotone = 0;
  for (size_t r = 0; r < es.rows.size(); ++r) {
    const bool predicted = es.number(r, "monotone_condition") >= -k.entropy_tolerance;
    const bool observed = es.number(r, "min_increment") >= -k.entropy_tolerance;
    agree += predicted == observed ? 1 : 0;
    monotone += observed ? 1 : 0;
  }
  c.add(0, "entropy monotone iff ln p_inf(s0) + S(p_inf) >= 0", agree == es.rows.size(),
        std::to_string(agree) + "/" + std::to_string(es.rows.size()) + " draws agree; " + std::to_string(monotone) +
            " monotone");
}

void verify_ou(Checker& c, const ExperimentConfig& cfg) {
  const auto& k = cfg.ou;
  const auto d = c.csv("ou_checks.csv");
  auto find = [&](const std::string& name) -> std::optional<size_t> {
    const size_t col = d.column("check");
    for (size_t r = 0; r < d.rows.size(); ++r) {
      if (d.rows[r][col] == name) return r;
    }
    return std::nullopt;
  };
  auto z_of = [&](size_t r) {
    const double se = d.number(r, "std_error");
    return se > 0.0 ? (d.number(r, "estimate") - d.number(r, "predicted")) / se : std::nan("");
  };
  bool pass = true;
  std::string detail;
  std::vector<double> stationary;
  std::vector<double> stationary_se;
  for (double x0 : k.x0_list) {
    const auto r = find("stationary_x0_" + io::format_number(x0));
    const double z = r ? z_of(*r) : std::nan("");
    pass = pass && std::isfinite(z) && std::abs(z) <= k.n_sigma;
    detail += "stationary x0=" + num(x0) + " z " + num(z) + "; ";
    if (r) {
      stationary.push_back(d.number(*r, "estimate"));
      stationary_se.push_back(d.number(*r, "std_error"));
    }
  }
  const auto sh = find("shaken");
  double rel = std::nan("");
  if (sh) rel = std::abs(d.number(*sh, "estimate") / d.number(*sh, "predicted") - 1.0);
  pass = pass && std::isfinite(rel) && rel < k.shaken_tolerance;
  detail += "shaken relative error " + num(rel) + "; ";
  const auto ei = find("einstein_identity");
  const double ez = ei ? z_of(*ei) : std::nan("");
  pass = pass && std::isfinite(ez) && std::abs(ez) <= k.n_sigma;
  detail += "Einstein identity z " + num(ez);
  c.add(11, "11 OU reference", pass, detail);

  // Supporting properties of the integrator.
  const auto ex = find("exact_sampler_x0_" + io::format_number(k.x0_list.front()));
  if (ex) {
    const double z = z_of(*ex);
    c.add(0, "OU exact sampler stationary variance", std::abs(z) <= k.n_sigma, "z " + num(z));
  }
  if (stationary.size() >= 2) {
    const double z = (stationary[0] - stationary[1]) / std::hypot(stationary_se[0], stationary_se[1]);
    c.add(0, "OU variance independent of x0", std::abs(z) <= k.n_sigma, "z " + num(z));
  }
  const auto hv = find("halved_step");
  const auto first = find("stationary_x0_" + io::format_number(k.x0_list.front()));
  if (hv && first) {
    const double diff = std::abs(d.number(*hv, "estimate") - d.number(*first, "estimate"));
    const double se = std::hypot(d.number(*hv, "std_error"), d.number(*first, "std_error"));
    c.add(0, "OU halved step", diff < 2.0 * se, "change " + num(diff) + " vs 2 SE " + num(2.0 * se));
  }
  const auto series = c.csv("ou_series.csv");
  double worst = 0.0;
  for (size_t r = 0; r < series.rows.size(); ++r) {
    if (!same_dt(series.number(r, "x0"), k.x0_list.front()) || series.number(r, "t") <= 0.0) continue;
    const double closed = series.number(r, "variance_closed");
    if (closed > 0.0) worst = std::max(worst, std::abs(series.number(r, "variance") / closed - 1.0));
  }
  c.add(0, "OU variance curve", worst < k.curve_tolerance, "max relative error " + num(worst));
}

void verify_ensemble(Checker& c, const ExperimentConfig& cfg) {
  const auto& k = cfg.ensemble;
  const auto v = c.csv("variance.csv");
  // Pool offsets into bins of variance_bin consecutive values centred on 0.
  std::map<Index, std::array<double, 3>> bins;  // sum count*emp, sum count*pred, sum count
  for (size_t r = 0; r < v.rows.size(); ++r) {
    const double off = v.number(r, "offset");
    if (std::abs(off) > static_cast<double>(k.variance_check_offset)) continue;
    const Index b = static_cast<Index>(std::floor(off / static_cast<double>(k.variance_bin) + 0.5));
    const double n = v.number(r, "count");
    auto& acc = bins[b];
    acc[0] += n * v.number(r, "empirical");
    acc[1] += n * v.number(r, "predicted");
    acc[2] += n;
  }
  double worst = bins.empty() ? std::numeric_limits<double>::infinity() : 0.0;
  for (const auto& [b, acc] : bins) {
    if (acc[2] <= 0.0 || acc[1] <= 0.0) continue;
    worst = std::max(worst, std::abs(acc[0] / acc[1] - 1.0));
  }
  c.add(10, "10 ensemble variance envelope", worst < k.variance_tolerance,
        std::to_string(bins.size()) + " bins, max relative deviation " + num(worst) + " (limit " +
            num(k.variance_tolerance) + ")");
  const auto f = c.csv("four_point.csv");
  bool pass = !f.rows.empty();
  std::string detail;
  for (size_t r = 0; r < f.rows.size(); ++r) {
    const double emp = f.number(r, "empirical");
    const double se = f.number(r, "std_error");
    const double corr = f.number(r, "correction_term");
    const double pred = f.number(r, "predicted");
    const double z = se > 0.0 ? (emp - pred) / se : std::nan("");
    const bool ok = corr < 0.0 && emp < 0.0 && std::isfinite(z) && std::abs(z) <= k.four_point_n_sigma;
    pass = pass && ok;
    detail += "empirical " + num(emp) + " predicted " + num(pred) + " z " + num(z) + "; ";
  }
  c.add(10, "10 four-point orthogonality correction", pass, detail);
}

}  // namespace

MissingArtifacts::MissingArtifacts(std::vector<std::string> missing)
    : std::runtime_error("missing artifacts: " + join(missing)), missing_(std::move(missing)) {}

std::vector<Verdict> verify_run(const fs::path& dir) {
  const fs::path mpath = dir / io::kManifestName;
  if (!fs::exists(mpath)) throw MissingArtifacts({mpath.string()});
  json manifest;
  try {
    manifest = json::parse(io::read_file(mpath));
  } catch (const json::exception& e) {
    throw io::IoError("unreadable manifest " + mpath.string() + ": " + e.what());
  }
  std::vector<std::string> missing;
  for (const auto& f : manifest.value("outputs", json::array())) {
    const fs::path p = dir / f.at("file").get<std::string>();
    if (!fs::exists(p)) missing.push_back(p.string());
  }
  if (!missing.empty()) throw MissingArtifacts(missing);
  Checker c(dir);
  if (manifest.value("status", "") != "ok") {
    c.add(0, "run status", false, "run did not complete: " + manifest.value("error", std::string("unknown")));
    return c.take();
  }
  if (manifest.value("experiment", "") == kDumpLabel) {
    c.add(0, "matrix dump", true, "no acceptance checks apply");
    return c.take();
  }
  const ExperimentConfig cfg = parse_config(manifest.at("config"));
  static const std::map<ExperimentKind, std::vector<std::string>> required = {
      {ExperimentKind::kEvolve, {"fit.csv", "series.csv"}},
      {ExperimentKind::kTrajectories, {"gamma_ratio.csv", "ensemble.csv", "transitions.csv"}},
      {ExperimentKind::kDosMeasure, {"dos.csv"}},
      {ExperimentKind::kEinstein, {"einstein.csv", "einstein_gaussian.csv"}},
      {ExperimentKind::kEntropy, {"chapman_kolmogorov.csv", "kernel_suite.csv", "entropy_curves.csv"}},
      {ExperimentKind::kOu, {"ou_checks.csv", "ou_series.csv"}},
      {ExperimentKind::kSampleEnsemble, {"variance.csv", "four_point.csv"}},
  };
  for (const auto& f : required.at(cfg.kind)) {
    if (!fs::exists(dir / f)) missing.push_back((dir / f).string());
  }
  if (!missing.empty()) throw MissingArtifacts(missing);

  switch (cfg.kind) {
    case ExperimentKind::kEvolve: verify_evolve(c, cfg); break;
    case ExperimentKind::kTrajectories: verify_trajectories(c, cfg); break;
    case ExperimentKind::kDosMeasure: verify_dos(c, cfg); break;
    case ExperimentKind::kEinstein: verify_einstein(c, cfg); break;
    case ExperimentKind::kEntropy: verify_oracle(c, cfg, manifest); break;
    case ExperimentKind::kOu: verify_ou(c, cfg); break;
    case ExperimentKind::kSampleEnsemble: verify_ensemble(c, cfg); break;
  }
  return c.take();
}

}  // namespace qtherm::app
