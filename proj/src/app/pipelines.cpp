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

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "qtherm/dynamics.hpp"
#include "qtherm/experiments.hpp"
#include "qtherm/io.hpp"
#include "qtherm/observable.hpp"
#include "qtherm/ou.hpp"
#include "qtherm/rmt.hpp"
#include "qtherm/rng.hpp"
#include "qtherm/spectral.hpp"
#include "qtherm/trajectories.hpp"

namespace qtherm::app {

namespace {

using Clock = std::chrono::steady_clock;

struct Ctx {
  const ExperimentConfig& cfg;
  io::OutputDir& out;
  std::uint64_t seed;
  int threads;
  Logger log;
  json timings = json::object();
  json summary = json::object();

  void say(const std::string& msg) const {
    if (log) log(msg);
  }
};

class Timer {
 public:
  Timer(Ctx& ctx, std::string name) : ctx_(ctx), name_(std::move(name)), t0_(Clock::now()) {}
  ~Timer() {
    ctx_.timings[name_] = std::chrono::duration<double>(Clock::now() - t0_).count();
  }

 private:
  Ctx& ctx_;
  std::string name_;
  Clock::time_point t0_;
};

double finite_or_nan(const std::optional<double>& v) { return v ? *v : std::nan(""); }

std::int64_t flag(bool b) { return b ? 1 : 0; }

struct Prepared {
  HamiltonianPair model;
  Spectrum spectrum;
  Observable obs;
};

Prepared prepare(Ctx& ctx) {
  Prepared p;
  {
    Timer t(ctx, "build_model");
    p.model = build_model(*ctx.cfg.model);
  }
  ctx.say("model " + to_string(p.model.kind) + " dim " + std::to_string(p.model.dim()));
  {
    Timer t(ctx, "diagonalize");
    p.spectrum = diagonalize(p.model);
  }
  p.obs = build_observable(p.model, ctx.cfg.observable);
  ctx.summary["dim"] = p.model.dim();
  ctx.summary["eigen_residual"] = p.spectrum.max_residual();
  ctx.summary["energy_min"] = p.spectrum.min_energy();
  ctx.summary["energy_max"] = p.spectrum.max_energy();
  return p;
}

std::vector<Index> initial_states(const ExperimentConfig& cfg, const Prepared& p) {
  const auto& rule = cfg.state;
  if (rule.rule == "product") {
    require(rule.index < p.model.dim(), "initial_state.index outside the basis");
    return {rule.index};
  }
  if (rule.rule == "mid_spectrum_max") return {select_mid_spectrum_max(p.model.basis, p.obs)};
  auto states = select_central_half_max(p.model.basis, p.obs, p.spectrum.min_energy(),
                                        p.spectrum.max_energy(), rule.count);
  require(!states.empty(), "no free state with max(O) in the central half of the spectrum");
  return states;
}

struct DecayResult {
  EvolutionSeries series;
  FluctuationReport fluctuations;
  DecayFit fit;
};

DecayResult reference_decay(const Prepared& p, const Matrix& o_eig, Index state,
                            const TimeGridSpec& grid, double band_factor) {
  DecayResult r;
  const Vector psi = free_state(p.spectrum.dim(), state);
  r.series = evolve_expectation(p.spectrum, psi, o_eig, grid.build());
  r.fluctuations = equilibrium_fluctuations(p.spectrum, psi, o_eig, 0.0);
  r.fit = fit_decay_auto(r.series.times, r.series.values,
                         band_factor * std::sqrt(std::max(0.0, r.fluctuations.delta2)));
  if (r.fit.ok) r.fluctuations = equilibrium_fluctuations(p.spectrum, psi, o_eig, r.fit.gamma);
  return r;
}

void write_energies(Ctx& ctx, const Spectrum& sp) {
  io::CsvTable t({"index", "energy"});
  for (Index i = 0; i < sp.dim(); ++i) t.row().add(i).add(sp.energies()(i));
  ctx.out.write_csv("energies.csv", t);
}

// ---------------------------------------------------------------- evolve

void run_evolve(Ctx& ctx) {
  const auto& k = ctx.cfg.evolve;
  Prepared p = prepare(ctx);
  const Index state = initial_states(ctx.cfg, p).front();
  const Matrix o_eig = p.spectrum.to_eigenbasis(p.obs.matrix);
  DecayResult r;
  {
    Timer t(ctx, "evolve");
    r = reference_decay(p, o_eig, state, k.grid, k.band_factor);
  }
  io::CsvTable series({"t", "value"});
  for (Index i = 0; i < r.series.times.size(); ++i) series.row().add(r.series.times(i)).add(r.series.values(i));
  ctx.out.write_csv("series.csv", series);
  write_energies(ctx, p.spectrum);

  const double energy = p.model.basis.energies()(state);
  const KernelDensity exact(p.spectrum.energies(), default_bandwidth(p.spectrum.energies()));
  const double dos = exact(energy);
  const auto& fl = r.fluctuations;
  OuMapping map;
  if (r.fit.ok && fl.delta2 > 0.0) map = ou_mapping(fl.sigma2, fl.delta2, r.fit.gamma, dos);

  io::CsvTable fit({"state", "energy", "fit_ok", "gamma", "amplitude", "o_start", "o_end", "residual",
                    "t_lo", "t_hi", "o_infinity", "sigma2", "delta2", "dos_inferred", "dos_exact",
                    "ou_v2", "ou_delta_x2", "ou_ratio"});
  fit.row()
      .add(state)
      .add(energy)
      .add(flag(r.fit.ok))
      .add(r.fit.gamma)
      .add(r.fit.amplitude)
      .add(r.fit.o_start)
      .add(r.fit.o_end)
      .add(r.fit.residual)
      .add(r.fit.t_lo)
      .add(r.fit.t_hi)
      .add(fl.o_infinity)
      .add(fl.sigma2)
      .add(fl.delta2)
      .add(finite_or_nan(fl.dos_inferred))
      .add(dos)
      .add(map.v2)
      .add(map.delta_x2)
      .add(map.ratio);
  ctx.out.write_csv("fit.csv", fit);
  ctx.summary["gamma"] = r.fit.gamma;
  ctx.summary["fit_note"] = r.fit.note;
  ctx.summary["fluctuation_note"] = fl.note;
  ctx.say("gamma_ev " + io::format_number(r.fit.gamma) + " residual " + io::format_number(r.fit.residual));
}

// ---------------------------------------------------------- trajectories

void run_trajectories(Ctx& ctx) {
  const auto& k = ctx.cfg.trajectories;
  Prepared p = prepare(ctx);
  const Index state = initial_states(ctx.cfg, p).front();
  const Matrix o_eig = p.spectrum.to_eigenbasis(p.obs.matrix);
  const Vector psi = free_state(p.spectrum.dim(), state);
  const DecayResult ref = reference_decay(p, o_eig, state, k.grid, k.band_factor);
  if (!ref.fit.ok) throw NumericError("reference decay fit failed: " + ref.fit.note);
  const double gamma_ev = ref.fit.gamma;
  const double energy = p.model.basis.energies()(state);
  const double range = p.spectrum.max_energy() - p.spectrum.min_energy();
  const Vector p_inf = stationary_distribution(p.obs, microcanonical_weights(p.model.basis, energy, gamma_ev));
  ctx.summary["state"] = state;
  ctx.summary["energy"] = energy;
  ctx.summary["gamma_ev"] = gamma_ev;
  ctx.say("gamma_ev " + io::format_number(gamma_ev));

  {
    io::CsvTable t({"t", "value"});
    for (Index i = 0; i < ref.series.times.size(); ++i) t.row().add(ref.series.times(i)).add(ref.series.values(i));
    ctx.out.write_csv("reference_series.csv", t);
    io::CsvTable q({"outcome", "value", "p_inf"});
    for (Index s = 0; s < p_inf.size(); ++s) q.row().add(s).add(p.obs.outcomes[static_cast<size_t>(s)]).add(p_inf(s));
    ctx.out.write_csv("p_inf.csv", q);
  }

  const size_t nk = p.obs.n_outcomes();
  std::vector<std::string> ens_cols = {"dt", "j", "t", "mean", "std_error", "unmeasured", "z",
                                       "entropy", "entropy_se", "energy_mean", "energy_sigma"};
  for (size_t s = 0; s < nk; ++s) ens_cols.push_back("p" + std::to_string(s));
  io::CsvTable ens(ens_cols);
  io::CsvTable ratio({"dt", "n_real", "gamma_qj", "gamma_ev", "ratio", "fit_ok", "fit_offset_fixed", "fit_t_hi",
                      "fit_residual", "single_entropy", "entropy_plateau", "saturation_error", "entropy_worst_drop_se",
                      "histories_max_z", "kernel_max_z", "sigma_e_over_range", "delta_e",
                      "energy_range", "max_probability_defect"});
  io::CsvTable trans({"dt", "s_i", "s_f", "count", "empirical", "predicted", "z"});
  io::CsvTable dump({"dt", "traj", "j", "t", "outcome", "value", "energy"});

  TrajectoryEngine engine(p.spectrum, p.obs);
  for (size_t d = 0; d < k.dt_list.size(); ++d) {
    const double dt = k.dt_list[d];
    Timer timer(ctx, "dt_" + io::format_number(dt));
    engine.set_dt(dt);
    const std::uint64_t base = derive_seed(ctx.seed, d);
    const auto records = engine.run(psi, k.n_meas, k.n_real, base, ctx.threads);
    EnsembleOptions eo;
    eo.equilibrium = ref.fluctuations.o_infinity;
    const EnsembleStats st = summarize_ensemble(records, p.obs.outcomes, range, eo);
    const EvolutionSeries un = evolve_expectation(p.spectrum, psi, o_eig, st.times);
    const HistoriesReport hist = consistent_histories_check(st, un);
    const KernelComparison kc = compare_transitions(st.transition_counts, markov_kernel(p_inf, gamma_ev, dt));
    // One long record, with the index following the ensemble members.
    const auto longrun = engine.run(psi, k.entropy_record_length, 1, base, 1, k.n_real);
    const double single = single_trajectory_entropy(longrun.front(), nk, 1.5 / gamma_ev);
    const EntropyVerdict ev = entropy_verdict(st, single, k.entropy_n_se);

    for (Index j = 0; j < st.times.size(); ++j) {
      ens.row().add(dt).add(j).add(st.times(j)).add(st.mean(j)).add(st.std_error(j)).add(un.values(j))
          .add(hist.z(j)).add(st.entropy(j)).add(st.entropy_se(j)).add(st.energy_mean(j)).add(st.energy_sigma(j));
      for (size_t s = 0; s < nk; ++s) ens.add(st.empirical_p(j, static_cast<Index>(s)));
    }
    const double gq = finite_or_nan(st.gamma_qj);
    ratio.row().add(dt).add(k.n_real).add(gq).add(gamma_ev).add(gq / gamma_ev).add(flag(st.fit.ok))
        .add(flag(st.fit.note == "offset fixed")).add(st.fit.t_hi).add(st.fit.residual).add(single)
        .add(ev.plateau).add(ev.saturation_error)
        .add(ev.worst_drop_in_se).add(hist.max_abs_z).add(kc.max_abs_z).add(st.sigma_e_over_range)
        .add(st.delta_e).add(range).add(st.max_probability_defect);
    for (Index i = 0; i < kc.z.rows(); ++i) {
      for (Index f = 0; f < kc.z.cols(); ++f) {
        trans.row().add(dt).add(i).add(f).add(static_cast<std::int64_t>(std::llround(st.transition_counts(i, f))))
            .add(kc.empirical(i, f)).add(kc.predicted(i, f)).add(kc.z(i, f));
      }
    }
    for (Index r = 0; r < std::min<Index>(k.dump_realizations, k.n_real); ++r) {
      const auto& rec = records[static_cast<size_t>(r)];
      for (Index j = 0; j < rec.outcomes.size(); ++j) {
        dump.row().add(dt).add(r).add(j).add(static_cast<double>(j) * dt)
            .add(rec.outcome_index[static_cast<size_t>(j)]).add(rec.outcomes(j)).add(rec.energies(j));
      }
    }
    ctx.say("dt " + io::format_number(dt) + " gamma_qj/gamma_ev " + io::format_number(gq / gamma_ev) +
            " histories max|z| " + io::format_number(hist.max_abs_z) + " kernel max|z| " +
            io::format_number(kc.max_abs_z) + " sigma_E/dE " + io::format_number(st.sigma_e_over_range));
  }
  ctx.out.write_csv("gamma_ratio.csv", ratio);
  ctx.out.write_csv("ensemble.csv", ens);
  ctx.out.write_csv("transitions.csv", trans);
  ctx.out.write_csv("trajectories.csv", dump);
}

// ----------------------------------------------------------- dos_measure

void run_dos(Ctx& ctx) {
  const auto& k = ctx.cfg.dos;
  Prepared p = prepare(ctx);
  const auto states = initial_states(ctx.cfg, p);
  DosExperimentOptions opt;
  opt.times = k.grid.build();
  opt.bandwidth = k.bandwidth;
  opt.band_factor = k.band_factor;
  std::vector<DosRow> rows;
  {
    Timer t(ctx, "dos_states");
    rows = measure_dos_experiment(p.spectrum, p.obs, states, opt);
  }
  io::CsvTable t({"state", "energy", "gamma", "sigma2", "delta2", "dos_inferred", "dos_exact", "ratio", "ok"});
  for (const auto& r : rows) {
    t.row().add(r.state).add(r.energy).add(r.gamma).add(r.sigma2).add(r.delta2).add(r.dos_inferred)
        .add(r.dos_exact).add(r.dos_exact > 0.0 ? r.dos_inferred / r.dos_exact : std::nan(""))
        .add(flag(r.ok));
  }
  ctx.out.write_csv("dos.csv", t);
  const double bw = k.bandwidth > 0.0 ? k.bandwidth : default_bandwidth(p.spectrum.energies());
  const DosEstimate curve = estimate_dos(p.spectrum.energies(), bw, 801);
  io::CsvTable c({"energy", "density"});
  for (Index i = 0; i < curve.energy_grid.size(); ++i) c.row().add(curve.energy_grid(i)).add(curve.density(i));
  ctx.out.write_csv("dos_exact.csv", c);
  ctx.summary["n_states"] = rows.size();
  ctx.summary["bandwidth"] = bw;
  write_energies(ctx, p.spectrum);
}

// -------------------------------------------------------------- einstein

double widest_distinct_gap(Vector levels) {
  std::sort(levels.data(), levels.data() + levels.size());
  double widest = 0.0;
  for (Index i = 1; i < levels.size(); ++i) {
    const double gap = levels(i) - levels(i - 1);
    if (gap > kDegenerateGap) widest = std::max(widest, gap);
  }
  return widest;
}

void run_einstein(Ctx& ctx) {
  const auto& k = ctx.cfg.einstein;
  Prepared p = prepare(ctx);
  require(p.obs.diagonal_in_free_basis && p.obs.system_local,
          "Einstein check needs a system-local observable diagonal in the free basis");
  const auto states = initial_states(ctx.cfg, p);
  const FreeBasis& basis = p.model.basis;
  const Vector& bath = basis.bath_energies();
  // The bath DOS must be smooth on the scale of its own level comb.
  const double bw = k.bath_bandwidth > 0.0 ? k.bath_bandwidth
                                           : std::max(default_bandwidth(bath), widest_distinct_gap(bath));
  const KernelDensity bath_dos(bath, bw);
  const double bath_spacing = default_bandwidth(bath) / 5.0;
  Vector s_values(basis.system_dim());
  for (Index s = 0; s < basis.system_dim(); ++s) {
    const Index prod = basis.product_index(s, 0);
    s_values(s) = p.obs.matrix(prod, prod);
  }
  const Matrix o_eig = p.spectrum.to_eigenbasis(p.obs.matrix);

  io::CsvTable t({"state", "energy", "gamma", "window", "beta", "m_beta", "sigma2_p", "sigma2_predicted",
                  "deviation", "sigma2_microcanonical", "flagged", "outside_regime"});
  for (Index state : states) {
    Timer timer(ctx, "state_" + std::to_string(state));
    const double energy = basis.energies()(state);
    const DecayResult r = reference_decay(p, o_eig, state, k.grid, k.band_factor);
    const double gamma = r.fit.ok ? r.fit.gamma : std::nan("");
    const double window = beta_window(r.fit.ok ? gamma : 0.0, bath_spacing);
    const SystemDistribution dist = system_distribution(DensityFunction(std::cref(bath_dos)),
                                                        basis.system_energies(), s_values, energy,
                                                        window, k.mass);
    const EinsteinReport rep = einstein_check(dist);
    double sigma2_mc = std::nan("");
    if (r.fit.ok) {
      const Vector pm = stationary_distribution(p.obs, microcanonical_weights(basis, energy, gamma));
      Vector vals(static_cast<Index>(p.obs.n_outcomes()));
      for (size_t i = 0; i < p.obs.n_outcomes(); ++i) vals(static_cast<Index>(i)) = p.obs.outcomes[i];
      const double mean = pm.dot(vals);
      sigma2_mc = pm.dot(vals.cwiseAbs2()) - mean * mean;
    }
    t.row().add(state).add(energy).add(gamma).add(window).add(dist.beta).add(rep.m_beta).add(rep.sigma2_from_p)
        .add(rep.sigma2_predicted).add(rep.relative_deviation).add(sigma2_mc).add(flag(rep.flagged))
        .add(flag(rep.outside_regime));
    ctx.say("state " + std::to_string(state) + " E " + io::format_number(energy) + " beta " +
            io::format_number(dist.beta) + " deviation " + io::format_number(rep.relative_deviation));
  }
  ctx.out.write_csv("einstein.csv", t);

  // Analytic control: D_B(E) = exp(beta E), eps_s = m s^2 / 2 on a wide lattice.
  const Index h = k.gaussian_half_range;
  Vector s(2 * h + 1), eps(2 * h + 1);
  for (Index i = 0; i <= 2 * h; ++i) {
    s(i) = static_cast<double>(i - h);
    eps(i) = 0.5 * k.mass * s(i) * s(i);
  }
  const double beta = k.gaussian_beta;
  const double e0 = eps.maxCoeff();
  const SystemDistribution g = system_distribution(
      [beta](double e) { return std::exp(beta * e); }, eps, s, e0, 1.0, k.mass);
  const EinsteinReport gr = einstein_check(g);
  io::CsvTable gt({"beta", "mass", "beta_fitted", "sigma2", "predicted", "deviation"});
  gt.row().add(beta).add(k.mass).add(g.beta).add(gr.sigma2_from_p).add(1.0 / (k.mass * beta))
      .add(std::abs(gr.sigma2_from_p * k.mass * beta - 1.0));
  ctx.out.write_csv("einstein_gaussian.csv", gt);
  ctx.summary["bath_bandwidth"] = bw;
  ctx.summary["bath_spacing"] = bath_spacing;
}

// --------------------------------------------------------------- entropy

Vector random_distribution(Rng& rng, Index d) {
  Vector p(d);
  for (Index i = 0; i < d; ++i) p(i) = -std::log(1.0 - NormalSampler::uniform(rng));  // Exp(1)
  return p / p.sum();
}

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + NormalSampler::uniform(rng) * (std::log(hi) - std::log(lo)));
}

void run_oracle(Ctx& ctx) {
  const auto& k = ctx.cfg.oracle;
  const Index d = k.n_outcomes;
  {
    Timer t(ctx, "chapman_kolmogorov");
    io::CsvTable ck({"draw", "gamma", "t_i", "t_m", "t_f", "error"});
    for (Index i = 0; i < k.n_ck_draws; ++i) {
      Rng rng = make_rng(ctx.seed, static_cast<std::uint64_t>(i));
      const Vector p = random_distribution(rng, d);
      const double g = log_uniform(rng, k.gamma_min, k.gamma_max);
      double ts[3];
      for (double& x : ts) x = NormalSampler::uniform(rng) * 5.0 / g;
      std::sort(ts, ts + 3);
      ck.row().add(i).add(g).add(ts[0]).add(ts[1]).add(ts[2])
          .add(chapman_kolmogorov_error(p, g, g, ts[0], ts[1], ts[2]));
    }
    ctx.out.write_csv("chapman_kolmogorov.csv", ck);
  }
  {
    Timer t(ctx, "kernel_suite");
    io::CsvTable ks({"draw", "gamma", "dt", "row_sum_error", "stationarity_error", "identity_error",
                     "long_time_error", "min_entry"});
    for (Index i = 0; i < k.n_ck_draws; ++i) {
      Rng rng = make_rng(ctx.seed, static_cast<std::uint64_t>(k.n_ck_draws + i));
      const Vector p = random_distribution(rng, d);
      const double g = log_uniform(rng, k.gamma_min, k.gamma_max);
      const double dt = NormalSampler::uniform(rng) * 5.0 / g;
      const Matrix kern = markov_kernel(p, g, dt);
      const double row_sum = (kern.rowwise().sum().array() - 1.0).abs().maxCoeff();
      const double stat = (p.transpose() * kern - p.transpose()).cwiseAbs().maxCoeff();
      const double ident = (markov_kernel(p, g, 0.0) - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
      const Matrix late = markov_kernel(p, g, 50.0 / g);
      const double lt = (late.rowwise() - p.transpose()).cwiseAbs().maxCoeff();
      ks.row().add(i).add(g).add(dt).add(row_sum).add(stat).add(ident).add(lt).add(kern.minCoeff());
    }
    ctx.out.write_csv("kernel_suite.csv", ks);
  }
  {
    Timer t(ctx, "entropy_curves");
    io::CsvTable es({"draw", "uniform", "gamma", "start", "min_increment", "s_end", "s_target",
                     "monotone_condition"});
    for (Index i = 0; i <= k.n_entropy_draws; ++i) {
      // The last draw uses the uniform stationary distribution.
      const bool uniform = i == k.n_entropy_draws;
      Rng rng = make_rng(ctx.seed, static_cast<std::uint64_t>(2 * k.n_ck_draws + i));
      const Vector p = uniform ? Vector::Constant(d, 1.0 / static_cast<double>(d)) : random_distribution(rng, d);
      const double g = log_uniform(rng, k.gamma_min, k.gamma_max);
      const Index start = static_cast<Index>(NormalSampler::uniform(rng) * static_cast<double>(d)) % d;
      Vector p0 = Vector::Zero(d);
      p0(start) = 1.0;
      const Vector times = Vector::LinSpaced(k.n_entropy_times, 0.0, 50.0 / g);
      const EntropyCurve c = predicted_entropy_curve(p0, p, g, times);
      // S_G is concave in 1 - e^{-2 Gamma t}, so it never decreases iff its
      // slope at equilibrium is non-negative: ln p_inf(s0) + S(p_inf) >= 0.
      const double condition = std::log(p(start)) + shannon_entropy(p);
      es.row().add(i).add(flag(uniform)).add(g).add(start).add(c.min_increment)
          .add(c.entropy(c.entropy.size() - 1)).add(shannon_entropy(p)).add(condition);
    }
    ctx.out.write_csv("entropy_curves.csv", es);
  }
}

// -------------------------------------------------------------------- ou

void run_ou(Ctx& ctx) {
  const auto& k = ctx.cfg.ou;
  OuParams base;
  base.k = k.k;
  base.gamma_friction = k.gamma_friction;
  base.diffusion = k.diffusion;
  base.dt_step = k.dt_step;
  base.t_final = k.t_final;
  base.validate();
  const double n = static_cast<double>(k.n_paths);
  auto var_se = [n](double v) { return v * std::sqrt(2.0 / (n - 1.0)); };

  io::CsvTable series({"x0", "t", "mean", "variance", "variance_exact_sampler", "mean_closed", "variance_closed"});
  io::CsvTable checks({"check", "estimate", "predicted", "std_error"});
  std::uint64_t stream = 0;
  for (double x0 : k.x0_list) {
    Timer t(ctx, "paths_x0_" + io::format_number(x0));
    OuParams p = base;
    p.x0 = x0;
    const auto em = simulate_ou(p, k.n_paths, derive_seed(ctx.seed, stream++), k.n_records, ctx.threads);
    const auto ex = sample_ou_exact(p, k.n_paths, derive_seed(ctx.seed, stream++), k.n_records, ctx.threads);
    for (Index i = 0; i < em.times.size(); ++i) {
      series.row().add(x0).add(em.times(i)).add(em.mean(i)).add(em.variance(i)).add(ex.variance(i))
          .add(ou_mean(p, em.times(i))).add(ou_variance(p, em.times(i)));
    }
    const double v = em.variance(em.variance.size() - 1);
    const double ve = ex.variance(ex.variance.size() - 1);
    checks.row().add("stationary_x0_" + io::format_number(x0)).add(v).add(ou_variance(p, p.t_final)).add(var_se(v));
    checks.row().add("exact_sampler_x0_" + io::format_number(x0)).add(ve).add(ou_variance(p, p.t_final)).add(var_se(ve));
  }
  {
    Timer t(ctx, "halved_step");
    OuParams p = base;
    p.x0 = k.x0_list.front();
    p.dt_step = base.dt_step / 2.0;
    const auto em = simulate_ou(p, k.n_paths, derive_seed(ctx.seed, stream++), k.n_records, ctx.threads);
    const double v = em.variance(em.variance.size() - 1);
    checks.row().add("halved_step").add(v).add(ou_variance(p, p.t_final)).add(var_se(v));
  }
  {
    Timer t(ctx, "einstein_identity");
    OuParams p = base;
    p.x0 = 0.0;
    p.diffusion = k.temperature / k.gamma_friction;
    const auto em = simulate_ou(p, k.n_paths, derive_seed(ctx.seed, stream++), k.n_records, ctx.threads);
    const double v = em.variance(em.variance.size() - 1);
    checks.row().add("einstein_identity").add(v).add(k.temperature / k.k * (1.0 - std::exp(-2.0 * p.rate() * p.t_final)))
        .add(var_se(v));
  }
  io::CsvTable paths({"path", "drift", "time_mean"});
  {
    Timer t(ctx, "shaken");
    OuParams p = base;
    p.x0 = 0.0;
    p.diffusion = k.shaken_diffusion;
    p.dt_step = k.shaken_dt_step;
    p.t_final = k.shaken_t_final;
    const auto sh = simulate_shaken_ou(p, k.v_std, k.n_paths, derive_seed(ctx.seed, stream++), k.burn_in, ctx.threads);
    for (Index i = 0; i < sh.path_means.size(); ++i) paths.row().add(i).add(sh.drifts(i)).add(sh.path_means(i));
    checks.row().add("shaken").add(sh.delta_x2).add(sh.predicted).add(sh.delta_x2_se);
    checks.row().add("shaken_noise_floor").add(sh.noise_floor).add(0.0).add(0.0);
  }
  ctx.out.write_csv("ou_series.csv", series);
  ctx.out.write_csv("ou_checks.csv", checks);
  ctx.out.write_csv("ou_paths.csv", paths);
}

// ------------------------------------------------------- sample_ensemble

void run_ensemble(Ctx& ctx) {
  const auto& k = ctx.cfg.ensemble;
  const Orthogonalization mode = k.orthogonalization == "orthonormal" ? Orthogonalization::kOrthonormal
                                                                      : Orthogonalization::kPreserveNorms;
  ChaoticEnsemble ens(lorentzian_envelope_matrix(k.n_grid, k.omega0, k.gamma), k.row_begin, k.n_states, mode);
  std::vector<FourPointTuple> tuples;
  for (const auto& a : k.tuples) tuples.push_back({a[0], a[1], a[2], a[3], a[4], a[5]});
  EnsembleSummary s;
  {
    Timer t(ctx, "sampling");
    s = run_chaotic_ensemble(ens, k.n_members, ctx.seed, k.max_offset, tuples, ctx.threads);
  }
  io::CsvTable v({"offset", "empirical", "std_error", "predicted", "count"});
  for (Index i = 0; i < s.variance.offsets.size(); ++i) {
    v.row().add(s.variance.offsets(i)).add(s.variance.empirical(i)).add(s.variance.std_error(i))
        .add(s.variance.predicted(i)).add(s.variance.counts[static_cast<size_t>(i)]);
  }
  ctx.out.write_csv("variance.csv", v);
  io::CsvTable f({"mu", "nu", "alpha", "beta", "alpha_p", "beta_p", "empirical", "std_error", "gaussian_term",
                  "correction_term", "predicted", "z"});
  for (const auto& r : s.four_point) {
    f.row().add(r.tuple.mu).add(r.tuple.nu).add(r.tuple.alpha).add(r.tuple.beta).add(r.tuple.alpha_p)
        .add(r.tuple.beta_p).add(r.empirical).add(r.std_error).add(r.gaussian_term).add(r.correction_term)
        .add(r.predicted).add(r.z_score());
  }
  ctx.out.write_csv("four_point.csv", f);
  ctx.summary["max_orthonormality_error"] = s.max_orthonormality_error;
  ctx.summary["n_members"] = s.n_members;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

json manifest(const Ctx& ctx, const std::string& label, const std::string& started, double wall, const std::string& status,
              const std::string& error) {
  json m;
  m["tool"] = "qtherm";
  m["version"] = QTHERM_VERSION;
  m["experiment"] = label;
  m["config"] = ctx.cfg.raw;
  m["config_hash"] = config_hash(ctx.cfg.raw);
  m["seed"] = ctx.seed;
  m["threads"] = ctx.threads;
  m["started_utc"] = started;
  m["wall_time_s"] = wall;
  m["timings_s"] = ctx.timings;
  m["status"] = status;
  if (!error.empty()) m["error"] = error;
  json files = json::array();
  for (const auto& f : ctx.out.files()) {
    const std::string bytes = io::read_file(ctx.out.root() / f);
    files.push_back({{"file", f}, {"bytes", bytes.size()}, {"fnv1a", io::hex64(io::fnv1a(bytes))}});
  }
  m["outputs"] = files;
  return m;
}

// Shared run wrapper: stale markers removed, manifest written on success and
// failure, FAILED marker on failure.
RunSummary run_wrapped(const ExperimentConfig& cfg, const fs::path& out_dir, const RunOptions& opt,
                       const std::string& label, const std::function<void(Ctx&)>& body) {
  const auto t0 = Clock::now();
  const std::string started = utc_now();
  io::OutputDir out(out_dir);
  std::error_code ec;
  fs::remove(out_dir / io::kFailedMarker, ec);
  fs::remove(out_dir / io::kManifestName, ec);

  Ctx ctx{cfg, out, opt.seed.value_or(cfg.seed), opt.threads.value_or(cfg.threads), opt.log};
  auto wall = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };
  auto write_manifest = [&](const std::string& status, const std::string& error) {
    io::OutputDir meta(out_dir);  // the manifest lists the outputs, not itself
    meta.write(io::kManifestName, manifest(ctx, label, started, wall(), status, error).dump(2) + "\n");
  };
  try {
    body(ctx);
    out.write("summary.json", ctx.summary.dump(2) + "\n");
  } catch (const std::exception& e) {
    try {
      out.write(io::kFailedMarker, std::string(e.what()) + "\n");
      write_manifest("failed", e.what());
    } catch (...) {
    }
    throw;
  }
  write_manifest("ok", "");
  return RunSummary{out_dir, out.files(), wall()};
}

void run_dump(Ctx& ctx) {
  if (!ctx.cfg.model) throw ConfigError("dump-matrix needs a config with a model section");
  HamiltonianPair model;
  {
    Timer t(ctx, "build_model");
    model = build_model(*ctx.cfg.model);
  }
  Spectrum spectrum;
  {
    Timer t(ctx, "diagonalize");
    spectrum = diagonalize(model);
  }
  ctx.out.write("hamiltonian.bin", io::encode_matrix(model.total()));
  ctx.out.write("spectrum.bin", io::encode_spectrum(spectrum.energies(), spectrum.vectors()));

  io::CsvTable free({"p", "alpha", "h0"});
  for (Index p = 0; p < model.dim(); ++p) {
    free.row().add(static_cast<std::int64_t>(p)).add(static_cast<std::int64_t>(model.basis.alpha_of(p))).add(model.h0(p));
  }
  ctx.out.write_csv("free_energies.csv", free);
  write_energies(ctx, spectrum);

  // Central 20% of the levels, widened on small spectra to the 50 states the
  // envelope fit needs.
  const double fraction = std::min(1.0, std::max(0.2, 60.0 / static_cast<double>(spectrum.dim())));
  const auto [lo, hi] = central_window(spectrum.energies(), fraction);
  const EnvelopeFit env = fit_envelope(spectrum, lo, hi, 41, 0.0);
  io::CsvTable bins({"offset", "lambda_avg", "count"});
  for (Index b = 0; b < env.bin_centers.size(); ++b) {
    bins.row().add(env.bin_centers(b)).add(env.lambda_avg(b)).add(static_cast<std::int64_t>(env.counts[static_cast<size_t>(b)]));
  }
  ctx.out.write_csv("envelope.csv", bins);
  ctx.summary["model"] = to_string(model.kind);
  ctx.summary["dim"] = model.dim();
  ctx.summary["max_residual"] = spectrum.max_residual();
  ctx.summary["envelope_gamma"] = env.gamma ? json(*env.gamma) : json(nullptr);
  ctx.summary["envelope_omega0"] = env.omega0;
  ctx.summary["envelope_fraction"] = fraction;
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, const RunOptions& opt) {
  return run_wrapped(cfg, out_dir, opt, to_string(cfg.kind), [](Ctx& ctx) {
    switch (ctx.cfg.kind) {
      case ExperimentKind::kEvolve: run_evolve(ctx); break;
      case ExperimentKind::kTrajectories: run_trajectories(ctx); break;
      case ExperimentKind::kDosMeasure: run_dos(ctx); break;
      case ExperimentKind::kEinstein: run_einstein(ctx); break;
      case ExperimentKind::kEntropy: run_oracle(ctx); break;
      case ExperimentKind::kOu: run_ou(ctx); break;
      case ExperimentKind::kSampleEnsemble: run_ensemble(ctx); break;
    }
  });
}

RunSummary dump_model(const ExperimentConfig& cfg, const fs::path& out_dir, const RunOptions& opt) {
  return run_wrapped(cfg, out_dir, opt, kDumpLabel, run_dump);
}

}  // namespace qtherm::app
