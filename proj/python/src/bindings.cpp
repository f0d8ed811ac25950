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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qtherm/dynamics.hpp"
#include "qtherm/experiments.hpp"
#include "qtherm/io.hpp"
#include "qtherm/models.hpp"
#include "qtherm/observable.hpp"
#include "qtherm/ou.hpp"
#include "qtherm/rmt.hpp"
#include "qtherm/spectral.hpp"
#include "qtherm/trajectories.hpp"

namespace py = pybind11;
using namespace qtherm;

namespace {

HamiltonianPair model_from_json(const std::string& text) {
  return app::build_model(app::parse_model_section(app::json::parse(text)));
}

py::dict fit_dict(const DecayFit& f) {
  py::dict d;
  d["ok"] = f.ok;
  d["gamma"] = f.gamma;
  d["amplitude"] = f.amplitude;
  d["o_start"] = f.o_start;
  d["o_end"] = f.o_end;
  d["residual"] = f.residual;
  d["t_lo"] = f.t_lo;
  d["t_hi"] = f.t_hi;
  d["note"] = f.note;
  return d;
}

}  // namespace

PYBIND11_MODULE(_qtherm, m) {
  m.doc() = "Exact-diagonalization thermalization toolkit";
  m.attr("__version__") = QTHERM_VERSION;

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<io::IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<app::MissingArtifacts>(m, "MissingArtifacts", PyExc_FileNotFoundError);

  py::class_<HamiltonianPair>(m, "Model")
      .def_property_readonly("kind", [](const HamiltonianPair& h) { return to_string(h.kind); })
      .def_property_readonly("dim", &HamiltonianPair::dim)
      .def_property_readonly("params", [](const HamiltonianPair& h) {
        py::dict d;
        for (const auto& [k, v] : h.params) d[py::str(k)] = v;
        return d;
      })
      .def_property_readonly("h0", [](const HamiltonianPair& h) { return h.h0; })
      .def_property_readonly("v", [](const HamiltonianPair& h) { return h.v; })
      .def_property_readonly("free_energies", [](const HamiltonianPair& h) { return h.basis.energies(); })
      .def("total", &HamiltonianPair::total)
      .def("product_index", [](const HamiltonianPair& h, Index s, Index b) { return h.basis.product_index(s, b); });

  m.def("_build_model", &model_from_json, py::arg("model_json"));
  m.def("model_names", &app::model_names);

  py::class_<Spectrum>(m, "Spectrum")
      .def_property_readonly("dim", &Spectrum::dim)
      .def_property_readonly("energies", &Spectrum::energies)
      .def_property_readonly("vectors", &Spectrum::vectors)
      .def_property_readonly("max_residual", &Spectrum::max_residual)
      .def("to_eigenbasis", &Spectrum::to_eigenbasis, py::arg("op"));
  m.def("diagonalize", py::overload_cast<const HamiltonianPair&>(&diagonalize), py::arg("model"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<Observable>(m, "Observable")
      .def_readonly("name", &Observable::name)
      .def_readonly("matrix", &Observable::matrix)
      .def_readonly("outcomes", &Observable::outcomes)
      .def_readonly("diagonal_in_free_basis", &Observable::diagonal_in_free_basis);
  m.def("build_observable", &build_observable, py::arg("model"), py::arg("name"));
  m.def("select_mid_spectrum_max",
        [](const HamiltonianPair& h, const Observable& o) { return select_mid_spectrum_max(h.basis, o); });

  m.def("free_state", &free_state, py::arg("dim"), py::arg("product_index"));
  m.def("log_time_grid", &log_time_grid, py::arg("t_min"), py::arg("t_max"), py::arg("n"));
  m.def("linear_time_grid", &linear_time_grid, py::arg("t_max"), py::arg("n"));
  m.def(
      "evolve_expectation",
      [](const Spectrum& sp, const Vector& psi, const Observable& o, const Vector& t) {
        return evolve_expectation(sp, psi, o, t).values;
      },
      py::arg("spectrum"), py::arg("psi0"), py::arg("observable"), py::arg("times"));
  m.def(
      "fit_decay",
      [](const Vector& t, const Vector& y, std::optional<double> band) {
        return fit_dict(band ? fit_decay_auto(t, y, *band) : fit_decay(t, y, t.minCoeff(), t.maxCoeff()));
      },
      py::arg("t"), py::arg("y"), py::arg("band") = py::none());
  m.def(
      "equilibrium_fluctuations",
      [](const Spectrum& sp, const Vector& psi, const Observable& o, double gamma) {
        const FluctuationReport r = equilibrium_fluctuations(sp, psi, o, gamma);
        py::dict d;
        d["o_infinity"] = r.o_infinity;
        d["sigma2"] = r.sigma2;
        d["delta2"] = r.delta2;
        d["dos_inferred"] = r.dos_inferred ? py::cast(*r.dos_inferred) : py::none();
        return d;
      },
      py::arg("spectrum"), py::arg("psi0"), py::arg("observable"), py::arg("gamma"));

  m.def("markov_kernel", &markov_kernel, py::arg("p_inf"), py::arg("gamma"), py::arg("dt"));
  m.def("chapman_kolmogorov_error", &chapman_kolmogorov_error, py::arg("p_inf"), py::arg("gamma_first"),
        py::arg("gamma_second"), py::arg("t_i"), py::arg("t_m"), py::arg("t_f"));
  m.def("shannon_entropy", &shannon_entropy, py::arg("p"));
  m.def(
      "predicted_entropy_curve",
      [](const Vector& p0, const Vector& p_inf, double gamma, const Vector& times) {
        const EntropyCurve c = predicted_entropy_curve(p0, p_inf, gamma, times);
        return py::make_tuple(c.entropy, c.min_increment);
      },
      py::arg("p0"), py::arg("p_inf"), py::arg("gamma"), py::arg("times"));

  m.def(
      "run_trajectories",
      [](const Spectrum& sp, const Observable& o, const Vector& psi, double dt, Index n_meas, Index n_real,
         std::uint64_t seed, int threads) {
        TrajectoryEngine eng(sp, o);
        eng.set_dt(dt);
        std::vector<TrajectoryRecord> rec;
        {
          py::gil_scoped_release release;
          rec = eng.run(psi, n_meas, n_real, seed, threads);
        }
        Matrix outcomes(static_cast<Index>(rec.size()), n_meas + 1);
        Matrix energies(static_cast<Index>(rec.size()), n_meas + 1);
        for (size_t r = 0; r < rec.size(); ++r) {
          outcomes.row(static_cast<Index>(r)) = rec[r].outcomes.transpose();
          energies.row(static_cast<Index>(r)) = rec[r].energies.transpose();
        }
        return py::make_tuple(outcomes, energies);
      },
      py::arg("spectrum"), py::arg("observable"), py::arg("psi0"), py::arg("dt"), py::arg("n_meas"),
      py::arg("n_real"), py::arg("seed"), py::arg("threads") = 1);

  m.def(
      "ou_moments",
      [](double k, double gamma, double d, double x0, const Vector& t) {
        OuParams p;
        p.k = k;
        p.gamma_friction = gamma;
        p.diffusion = d;
        p.x0 = x0;
        Vector mean(t.size()), var(t.size());
        for (Index i = 0; i < t.size(); ++i) {
          mean(i) = ou_mean(p, t(i));
          var(i) = ou_variance(p, t(i));
        }
        return py::make_tuple(mean, var);
      },
      py::arg("k"), py::arg("gamma"), py::arg("diffusion"), py::arg("x0"), py::arg("times"));
  m.def(
      "simulate_ou",
      [](double k, double gamma, double d, double x0, double dt, double t_final, Index n_paths,
         std::uint64_t seed, Index n_records, int threads) {
        OuParams p{k, gamma, d, x0, dt, t_final};
        OuPathStats s;
        {
          py::gil_scoped_release release;
          s = simulate_ou(p, n_paths, seed, n_records, threads);
        }
        return py::make_tuple(s.times, s.mean, s.variance);
      },
      py::arg("k"), py::arg("gamma"), py::arg("diffusion"), py::arg("x0"), py::arg("dt_step"),
      py::arg("t_final"), py::arg("n_paths"), py::arg("seed"), py::arg("n_records") = 101,
      py::arg("threads") = 1);

  m.def(
      "_run_experiment",
      [](const std::string& config_json, const std::filesystem::path& out, std::optional<std::uint64_t> seed,
         std::optional<int> threads) {
        const app::ExperimentConfig cfg = app::parse_config(app::json::parse(config_json));
        app::RunOptions opt;
        opt.seed = seed;
        opt.threads = threads;
        app::RunSummary s;
        {
          py::gil_scoped_release release;
          s = app::run_experiment(cfg, out, opt);
        }
        py::dict d;
        d["dir"] = s.dir;
        d["files"] = s.files;
        d["wall_seconds"] = s.wall_seconds;
        return d;
      },
      py::arg("config_json"), py::arg("out_dir"), py::arg("seed") = py::none(), py::arg("threads") = py::none());
  m.def(
      "verify_run",
      [](const std::filesystem::path& dir) {
        py::list out;
        for (const auto& v : app::verify_run(dir)) {
          py::dict d;
          d["criterion"] = v.criterion;
          d["label"] = v.label;
          d["pass"] = v.pass;
          d["detail"] = v.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("dir"));
  m.def(
      "read_matrix_dump",
      [](const std::filesystem::path& p) { return io::decode_matrix(io::read_file(p)); }, py::arg("path"));
  m.def(
      "read_spectrum_dump",
      [](const std::filesystem::path& p) {
        auto [e, v] = io::decode_spectrum(io::read_file(p));
        return py::make_tuple(e, v);
      },
      py::arg("path"));
  m.def("format_number", py::overload_cast<double>(&io::format_number), py::arg("value"));
}
