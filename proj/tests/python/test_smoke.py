# Copyright 2026 The qtherm Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import math

import numpy as np
import pytest

import qtherm


def test_model_and_spectrum():
    m = qtherm.build_model("oscillator", n_sites=3, spin_cutoff=1)
    assert m.kind == "oscillator_chain"
    assert m.dim == 27
    h = m.total()
    assert np.allclose(h, h.T)
    sp = qtherm.diagonalize(m)
    assert np.allclose(sp.energies, np.linalg.eigvalsh(h), atol=1e-10)
    assert sp.max_residual < 1e-10
    c = sp.vectors
    assert np.allclose(c.T @ c, np.eye(m.dim), atol=1e-10)


def test_unknown_model_key_is_rejected():
    with pytest.raises(ValueError, match="bogus"):
        qtherm.build_model("oscillator", bogus=1)


def test_evolution_and_fit():
    m = qtherm.build_model("oscillator", n_sites=3, spin_cutoff=2)
    sp = qtherm.diagonalize(m)
    obs = qtherm.build_observable(m, "position_site_1")
    assert obs.outcomes == [-2.0, -1.0, 0.0, 1.0, 2.0]
    a0 = qtherm.select_mid_spectrum_max(m, obs)
    psi = qtherm.free_state(m.dim, a0)
    t = qtherm.log_time_grid(0.01, 100.0, 200)
    y = qtherm.evolve_expectation(sp, psi, obs, t)
    assert y[0] == pytest.approx(2.0)
    fl = qtherm.equilibrium_fluctuations(sp, psi, obs, 0.0)
    assert abs(np.mean(y[t > 50]) - fl["o_infinity"]) < 5 * math.sqrt(fl["delta2"]) + 1e-9


def test_kernel_and_entropy():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    k = qtherm.markov_kernel(p, 0.5, 2.0)
    assert np.allclose(k.sum(axis=1), 1.0, atol=1e-14)
    assert np.allclose(p @ k, p, atol=1e-14)
    assert qtherm.chapman_kolmogorov_error(p, 0.5, 0.5, 0.0, 1.0, 3.0) < 1e-12
    assert qtherm.shannon_entropy(np.full(7, 1 / 7)) == pytest.approx(math.log(7))
    p0 = np.zeros(7)
    p0[0] = 1.0
    s, min_inc = qtherm.predicted_entropy_curve(p0, np.full(7, 1 / 7), 1.0, np.linspace(0, 50, 200))
    assert s[0] == 0.0 and abs(s[-1] - math.log(7)) < 1e-9 and min_inc >= -1e-12


def test_trajectories_are_seeded():
    m = qtherm.build_model("oscillator", n_sites=3, spin_cutoff=1)
    sp = qtherm.diagonalize(m)
    obs = qtherm.build_observable(m, "position_site_1")
    psi = qtherm.free_state(m.dim, qtherm.select_mid_spectrum_max(m, obs))
    a, ea = qtherm.run_trajectories(sp, obs, psi, 1.0, 10, 8, seed=5)
    b, eb = qtherm.run_trajectories(sp, obs, psi, 1.0, 10, 8, seed=5, threads=2)
    assert a.shape == (8, 11)
    assert np.array_equal(a, b) and np.array_equal(ea, eb)
    assert set(np.unique(a)) <= {-1.0, 0.0, 1.0}


def test_ou_closed_form_and_simulation():
    t = np.array([0.0, 1.0, 10.0])
    mean, var = qtherm.ou_moments(1.0, 2.0, 0.5, 1.0, t)
    assert mean[1] == pytest.approx(math.exp(-0.5))
    assert var[2] == pytest.approx(1.0 * (1 - math.exp(-10.0)))
    times, m_sim, v_sim = qtherm.simulate_ou(1.0, 1.0, 0.5, 0.0, 0.01, 5.0, 4000, seed=3, n_records=6)
    assert times[-1] == pytest.approx(5.0)
    assert abs(v_sim[-1] - 0.5 * (1 - math.exp(-10.0))) < 4 * 0.5 * math.sqrt(2 / 3999)


def test_run_verify_and_dump_round_trip(tmp_path):
    cfg = {"experiment": "entropy", "seed": 4, "entropy": {"n_ck_draws": 10, "n_entropy_draws": 5}}
    out = qtherm.run_experiment(cfg, tmp_path / "oracle")
    assert "chapman_kolmogorov.csv" in out["files"]
    manifest = json.loads((tmp_path / "oracle" / "manifest.json").read_text())
    assert manifest["seed"] == 4 and manifest["status"] == "ok"
    verdicts = {v["label"]: v for v in qtherm.verify_run(tmp_path / "oracle")}
    assert verdicts["1 Chapman-Kolmogorov"]["pass"]
    with pytest.raises(FileNotFoundError):
        qtherm.verify_run(tmp_path)


def test_config_errors_surface_as_value_errors(tmp_path):
    with pytest.raises(ValueError):
        qtherm.run_experiment({"experiment": "ou", "typo": 1}, tmp_path / "x")
    assert not (tmp_path / "x").exists()


def test_number_format_round_trips():
    for x in [0.1, 1 / 3, 1e-300, -2.5e17]:
        assert float(qtherm.format_number(x)) == x
