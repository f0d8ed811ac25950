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

#include <cstdlib>
#include <fstream>
#include <set>

#include "qtherm/dynamics.hpp"
#include "qtherm/experiments.hpp"
#include "qtherm/io.hpp"

namespace qtherm::app {

namespace {

// JSON object reader that remembers which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("must be an object");
  }

  bool has(const std::string& k) {
    used_.insert(k);
    return j_.contains(k);
  }

  void number(const std::string& k, double& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number()) fail(k, "expected a number");
    out = v.get<double>();
  }
  void number(const std::string& k, std::optional<double>& out) {
    if (!has(k)) return;
    double v = 0.0;
    number(k, v);
    out = v;
  }
  void integer(const std::string& k, Index& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number_integer()) fail(k, "expected an integer");
    out = v.get<Index>();
  }
  void integer(const std::string& k, int& out) {
    Index v = out;
    integer(k, v);
    out = static_cast<int>(v);
  }
  void unsigned_integer(const std::string& k, std::uint64_t& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail(k, "expected a non-negative integer");
    }
    out = v.get<std::uint64_t>();
  }
  void text(const std::string& k, std::string& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_string()) fail(k, "expected a string");
    out = v.get<std::string>();
  }
  void numbers(const std::string& k, std::vector<double>& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_array()) fail(k, "expected an array of numbers");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number()) fail(k, "expected an array of numbers");
      out.push_back(x.get<double>());
    }
  }
  const json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }
  Section sub(const std::string& k) {
    used_.insert(k);
    return Section(j_.at(k), path_ + "." + k);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }
  [[noreturn]] void fail(const std::string& k, const std::string& msg) const {
    throw ConfigError(path_ + "." + k + ": " + msg);
  }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

TimeGridSpec parse_grid(Section s, TimeGridSpec g) {
  s.text("kind", g.kind);
  s.number("t_min", g.t_min);
  s.number("t_max", g.t_max);
  s.integer("n", g.n);
  s.finish();
  check(g.kind == "log" || g.kind == "linear", s.path() + ".kind: expected 'log' or 'linear'");
  check(g.n >= 4, s.path() + ".n: need at least 4 points");
  check(g.t_max > 0.0 && (g.kind == "linear" || (g.t_min > 0.0 && g.t_min < g.t_max)),
        s.path() + ": invalid time range");
  return g;
}

void maybe_grid(Section& s, TimeGridSpec& g) {
  if (s.has("time_grid")) g = parse_grid(s.sub("time_grid"), g);
}

ModelSpec parse_model(Section s) {
  ModelSpec m;
  std::string kind;
  s.text("kind", kind);
  check(!kind.empty(), s.path() + ".kind is required");
  m.kind = model_from_string(kind);
  s.integer("max_dim", m.max_dim);
  switch (m.kind) {
    case ModelKind::kOscillatorChain: {
      auto& p = m.oscillator;
      s.integer("n_sites", p.n_sites);
      s.integer("spin_cutoff", p.spin_cutoff);
      s.number("h_x", p.h_x);
      s.number("j", p.j);
      break;
    }
    case ModelKind::kBlbqChain: {
      auto& p = m.blbq;
      s.integer("n_sites", p.n_sites);
      s.number("spin", p.spin);
      s.number("h_z", p.h_z);
      s.number("h_x", p.h_x);
      s.number("j", p.j);
      s.number("delta", p.delta);
      s.number("q", p.q);
      break;
    }
    case ModelKind::kSpinHalfChain: {
      auto& p = m.spin_half;
      s.integer("n_sites", p.n_sites);
      s.number("b_z_system", p.b_z_system);
      s.number("b_x_system", p.b_x_system);
      s.number("b_z_bath", p.b_z_bath);
      s.number("b_x_bath", p.b_x_bath);
      s.number("j_z_bath", p.j_z_bath);
      s.number("j_x_bath", p.j_x_bath);
      s.number("j_z_coupling", p.j_z_coupling);
      s.number("j_x_coupling", p.j_x_coupling);
      break;
    }
  }
  s.finish();
  return m;
}

void parse_evolve(Section s, EvolveKnobs& k) {
  maybe_grid(s, k.grid);
  s.number("band_factor", k.band_factor);
  s.number("max_residual_fraction", k.max_residual_fraction);
  s.finish();
  check(k.band_factor > 0.0, "evolve.band_factor must be positive");
}

void parse_trajectories(Section s, TrajectoryKnobs& k) {
  s.numbers("dt_list", k.dt_list);
  s.integer("n_meas", k.n_meas);
  s.integer("n_real", k.n_real);
  maybe_grid(s, k.grid);
  s.number("band_factor", k.band_factor);
  s.integer("entropy_record_length", k.entropy_record_length);
  s.integer("dump_realizations", k.dump_realizations);
  s.number("zeno_dt", k.zeno_dt);
  s.numbers("ratio_dts", k.ratio_dts);
  s.number("ratio_lo", k.ratio_lo);
  s.number("ratio_hi", k.ratio_hi);
  s.number("zeno_max_ratio", k.zeno_max_ratio);
  s.numbers("entropy_dts", k.entropy_dts);
  s.number("entropy_n_se", k.entropy_n_se);
  s.number("entropy_saturation", k.entropy_saturation);
  s.number("histories_dt", k.histories_dt);
  s.number("histories_max_z", k.histories_max_z);
  s.number("kernel_dt", k.kernel_dt);
  s.number("kernel_max_z", k.kernel_max_z);
  s.number("drift_dt", k.drift_dt);
  s.number("drift_target", k.drift_target);
  s.number("drift_factor", k.drift_factor);
  s.finish();
  check(!k.dt_list.empty(), "trajectories.dt_list must not be empty");
  for (double dt : k.dt_list) check(dt > 0.0, "trajectories.dt_list entries must be positive");
  check(k.n_meas >= 4, "trajectories.n_meas must be at least 4");
  check(k.n_real >= 2, "trajectories.n_real must be at least 2");
  check(k.entropy_record_length >= 10, "trajectories.entropy_record_length must be at least 10");
  check(k.dump_realizations >= 0, "trajectories.dump_realizations must be non-negative");
}

void parse_dos(Section s, DosKnobs& k) {
  maybe_grid(s, k.grid);
  s.number("bandwidth", k.bandwidth);
  s.number("band_factor", k.band_factor);
  s.number("tolerance_factor", k.tolerance_factor);
  s.number("required_fraction", k.required_fraction);
  s.finish();
  check(k.tolerance_factor > 1.0, "dos_measure.tolerance_factor must exceed 1");
}

void parse_einstein(Section s, EinsteinKnobs& k) {
  maybe_grid(s, k.grid);
  s.number("mass", k.mass);
  s.number("bath_bandwidth", k.bath_bandwidth);
  s.number("band_factor", k.band_factor);
  s.number("max_deviation", k.max_deviation);
  s.integer("min_states", k.min_states);
  s.number("gaussian_beta", k.gaussian_beta);
  s.integer("gaussian_half_range", k.gaussian_half_range);
  s.number("gaussian_tolerance", k.gaussian_tolerance);
  s.finish();
  check(k.mass > 0.0, "einstein.mass must be positive");
  check(k.gaussian_beta > 0.0 && k.gaussian_half_range >= 2, "einstein: invalid Gaussian control");
}

void parse_oracle(Section s, OracleKnobs& k) {
  s.integer("n_outcomes", k.n_outcomes);
  s.integer("n_ck_draws", k.n_ck_draws);
  s.integer("n_entropy_draws", k.n_entropy_draws);
  s.integer("n_entropy_times", k.n_entropy_times);
  s.number("gamma_min", k.gamma_min);
  s.number("gamma_max", k.gamma_max);
  s.number("ck_tolerance", k.ck_tolerance);
  s.number("stationarity_tolerance", k.stationarity_tolerance);
  s.number("long_time_tolerance", k.long_time_tolerance);
  s.number("entropy_tolerance", k.entropy_tolerance);
  s.finish();
  check(k.n_outcomes >= 2, "entropy.n_outcomes must be at least 2");
  check(k.n_ck_draws >= 1 && k.n_entropy_draws >= 1, "entropy: draw counts must be positive");
  check(k.n_entropy_times >= 3, "entropy.n_entropy_times must be at least 3");
  check(k.gamma_min > 0.0 && k.gamma_max > k.gamma_min, "entropy: invalid gamma range");
}

void parse_ou(Section s, OuKnobs& k) {
  s.number("k", k.k);
  s.number("gamma_friction", k.gamma_friction);
  s.number("diffusion", k.diffusion);
  s.numbers("x0_list", k.x0_list);
  s.number("dt_step", k.dt_step);
  s.number("t_final", k.t_final);
  s.integer("n_paths", k.n_paths);
  s.integer("n_records", k.n_records);
  s.number("v_std", k.v_std);
  s.number("shaken_diffusion", k.shaken_diffusion);
  s.number("shaken_dt_step", k.shaken_dt_step);
  s.number("shaken_t_final", k.shaken_t_final);
  s.number("burn_in", k.burn_in);
  s.number("temperature", k.temperature);
  s.number("n_sigma", k.n_sigma);
  s.number("shaken_tolerance", k.shaken_tolerance);
  s.number("curve_tolerance", k.curve_tolerance);
  s.finish();
  check(!k.x0_list.empty(), "ou.x0_list must not be empty");
  check(k.n_paths >= 2, "ou.n_paths must be at least 2");
  check(k.temperature > 0.0, "ou.temperature must be positive");
}

void parse_ensemble(Section s, EnsembleKnobs& k) {
  s.integer("n_grid", k.n_grid);
  s.number("omega0", k.omega0);
  s.number("gamma", k.gamma);
  s.integer("row_begin", k.row_begin);
  s.integer("n_states", k.n_states);
  s.integer("n_members", k.n_members);
  s.integer("max_offset", k.max_offset);
  s.text("orthogonalization", k.orthogonalization);
  if (s.has("tuples")) {
    const json& t = s.raw("tuples");
    check(t.is_array(), "sample_ensemble.tuples must be an array");
    k.tuples.clear();
    for (const auto& row : t) {
      check(row.is_array() && row.size() == 6, "sample_ensemble.tuples entries need 6 indices");
      std::array<Index, 6> a{};
      for (size_t i = 0; i < 6; ++i) {
        check(row[i].is_number_integer(), "sample_ensemble.tuples entries must be integers");
        a[i] = row[i].get<Index>();
      }
      k.tuples.push_back(a);
    }
  }
  s.integer("variance_bin", k.variance_bin);
  s.integer("variance_check_offset", k.variance_check_offset);
  s.number("variance_tolerance", k.variance_tolerance);
  s.number("four_point_n_sigma", k.four_point_n_sigma);
  s.finish();
  check(k.orthogonalization == "preserve_norms" || k.orthogonalization == "orthonormal",
        "sample_ensemble.orthogonalization: expected 'preserve_norms' or 'orthonormal'");
  check(k.n_members >= 2, "sample_ensemble.n_members must be at least 2");
  check(k.variance_bin >= 1, "sample_ensemble.variance_bin must be positive");
  for (const auto& t : k.tuples) {
    for (Index v : t) check(v >= 0 && v < k.n_grid, "sample_ensemble.tuples index outside the grid");
    check(t[0] >= k.row_begin && t[0] < k.row_begin + k.n_states && t[1] >= k.row_begin &&
              t[1] < k.row_begin + k.n_states,
          "sample_ensemble.tuples rows must lie in the sampled block");
  }
}

bool needs_model(ExperimentKind k) {
  return k == ExperimentKind::kEvolve || k == ExperimentKind::kTrajectories ||
         k == ExperimentKind::kDosMeasure || k == ExperimentKind::kEinstein;
}

}  // namespace

Vector TimeGridSpec::build() const {
  return kind == "log" ? log_time_grid(t_min, t_max, n) : linear_time_grid(t_max, n);
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kEvolve: return "evolve";
    case ExperimentKind::kTrajectories: return "trajectories";
    case ExperimentKind::kDosMeasure: return "dos_measure";
    case ExperimentKind::kEinstein: return "einstein";
    case ExperimentKind::kEntropy: return "entropy";
    case ExperimentKind::kOu: return "ou";
    case ExperimentKind::kSampleEnsemble: return "sample_ensemble";
  }
  return "unknown";
}

std::vector<std::string> experiment_names() {
  return {"evolve", "trajectories", "dos_measure", "einstein", "entropy", "ou", "sample_ensemble"};
}

ExperimentKind experiment_from_string(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(ExperimentKind::kSampleEnsemble); ++i) {
    const auto k = static_cast<ExperimentKind>(i);
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

std::vector<std::string> model_names() { return {"oscillator", "blbq", "spin_half"}; }

ModelKind model_from_string(const std::string& name) {
  if (name == "oscillator") return ModelKind::kOscillatorChain;
  if (name == "blbq") return ModelKind::kBlbqChain;
  if (name == "spin_half") return ModelKind::kSpinHalfChain;
  throw ConfigError("unknown model kind '" + name + "'");
}

HamiltonianPair build_model(const ModelSpec& spec) {
  BuildOptions opt;
  opt.max_dim = spec.max_dim;
  switch (spec.kind) {
    case ModelKind::kOscillatorChain: return build_oscillator_chain(spec.oscillator, opt);
    case ModelKind::kBlbqChain: return build_blbq_chain(spec.blbq, opt);
    case ModelKind::kSpinHalfChain: return build_spin_half_chain(spec.spin_half, opt);
  }
  throw ConfigError("unknown model kind");
}

ModelSpec parse_model_section(const json& j) { return parse_model(Section(j, "model")); }

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  c.raw = j;
  Section s(j, "config");
  std::string kind;
  s.text("experiment", kind);
  check(!kind.empty(), "config.experiment is required");
  c.kind = experiment_from_string(kind);
  s.unsigned_integer("seed", c.seed);
  s.integer("threads", c.threads);
  check(c.threads >= 1, "config.threads must be at least 1");
  s.text("output", c.output);

  if (needs_model(c.kind)) {
    check(s.has("model"), "config.model is required for " + kind);
    c.model = parse_model(s.sub("model"));
    s.text("observable", c.observable);
    check(!c.observable.empty(), "config.observable is required for " + kind);
    if (s.has("initial_state")) {
      Section st = s.sub("initial_state");
      st.text("rule", c.state.rule);
      st.integer("count", c.state.count);
      st.integer("index", c.state.index);
      st.finish();
      check(c.state.rule == "mid_spectrum_max" || c.state.rule == "central_half_max" ||
                c.state.rule == "product",
            "config.initial_state.rule: expected mid_spectrum_max, central_half_max or product");
      check(c.state.count >= 1, "config.initial_state.count must be positive");
      check(c.state.rule != "product" || c.state.index >= 0,
            "config.initial_state.index is required for the product rule");
    }
  }

  // Only the section named after the experiment is accepted.
  const std::string section = to_string(c.kind);
  if (s.has(section)) {
    Section k = s.sub(section);
    switch (c.kind) {
      case ExperimentKind::kEvolve: parse_evolve(std::move(k), c.evolve); break;
      case ExperimentKind::kTrajectories: parse_trajectories(std::move(k), c.trajectories); break;
      case ExperimentKind::kDosMeasure: parse_dos(std::move(k), c.dos); break;
      case ExperimentKind::kEinstein: parse_einstein(std::move(k), c.einstein); break;
      case ExperimentKind::kEntropy: parse_oracle(std::move(k), c.oracle); break;
      case ExperimentKind::kOu: parse_ou(std::move(k), c.ou); break;
      case ExperimentKind::kSampleEnsemble: parse_ensemble(std::move(k), c.ensemble); break;
    }
  }
  if (c.kind == ExperimentKind::kSampleEnsemble && c.ensemble.tuples.empty()) {
    const Index mu = c.ensemble.row_begin;
    const Index nu = c.ensemble.n_states > 1 ? mu + 1 : mu;
    const Index a2 = std::min(c.ensemble.n_grid - 1, mu + static_cast<Index>(std::llround(c.ensemble.gamma / c.ensemble.omega0)));
    c.ensemble.tuples.push_back({mu, nu, mu, mu, a2, a2});
  }
  s.finish();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

std::string config_hash(const json& raw) { return io::hex64(io::fnv1a(raw.dump())); }

fs::path resolve_output_dir(const ExperimentConfig& cfg, const fs::path& config_path,
                            const std::optional<fs::path>& flag) {
  if (flag) return *flag;
  if (!cfg.output.empty()) return cfg.output;
  const char* env = std::getenv("QTHERM_OUTPUT_ROOT");
  const fs::path root = env && *env ? fs::path(env) : fs::path("qtherm-out");
  return root / config_path.stem();
}

}  // namespace qtherm::app
