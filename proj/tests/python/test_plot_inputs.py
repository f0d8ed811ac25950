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

"""Column sets that a plotting tool reads from run directories."""

import csv
import json

import qtherm

MODEL = {"kind": "oscillator", "n_sites": 3, "spin_cutoff": 2, "h_x": 0.7, "j": 0.8}
GRID = {"kind": "log", "t_min": 0.01, "t_max": 100, "n": 120}


def header(path):
    with open(path, newline="") as f:
        return next(csv.reader(f))


def listed(run_dir):
    manifest = json.loads((run_dir / "manifest.json").read_text())
    return {o["file"] for o in manifest["outputs"]}


def test_evolve_outputs(tmp_path):
    cfg = {"experiment": "evolve", "seed": 1, "model": MODEL, "observable": "position_site_1",
           "evolve": {"time_grid": GRID}}
    qtherm.run_experiment(cfg, tmp_path)
    assert {"series.csv", "fit.csv", "energies.csv", "summary.json"} <= listed(tmp_path)
    assert header(tmp_path / "series.csv") == ["t", "value"]
    assert {"gamma", "amplitude", "o_end", "t_lo", "t_hi"} <= set(header(tmp_path / "fit.csv"))
    assert header(tmp_path / "energies.csv") == ["index", "energy"]


def test_trajectory_outputs(tmp_path):
    cfg = {"experiment": "trajectories", "seed": 3, "model": MODEL, "observable": "position_site_1",
           "trajectories": {"dt_list": [1, 2], "n_meas": 6, "n_real": 20, "time_grid": GRID,
                            "entropy_record_length": 50, "dump_realizations": 3}}
    qtherm.run_experiment(cfg, tmp_path)
    assert {"gamma_ratio.csv", "ensemble.csv", "transitions.csv", "trajectories.csv",
            "reference_series.csv", "p_inf.csv"} <= listed(tmp_path)
    assert {"dt", "ratio", "single_entropy", "sigma_e_over_range"} <= set(header(tmp_path / "gamma_ratio.csv"))
    ens = header(tmp_path / "ensemble.csv")
    assert {"dt", "j", "t", "mean", "std_error", "entropy", "entropy_se", "energy_mean", "energy_sigma"} <= set(ens)
    assert header(tmp_path / "trajectories.csv") == ["dt", "traj", "j", "t", "outcome", "value", "energy"]
    with open(tmp_path / "trajectories.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2 * 3 * 7
    assert {r["traj"] for r in rows} == {"0", "1", "2"}


def test_dos_outputs(tmp_path):
    cfg = {"experiment": "dos_measure", "seed": 2, "model": MODEL, "observable": "position_site_1",
           "initial_state": {"rule": "central_half_max", "count": 3}, "dos_measure": {"time_grid": GRID}}
    qtherm.run_experiment(cfg, tmp_path)
    assert {"dos.csv", "dos_exact.csv"} <= listed(tmp_path)
    assert {"energy", "dos_inferred", "dos_exact"} <= set(header(tmp_path / "dos.csv"))
    assert header(tmp_path / "dos_exact.csv") == ["energy", "density"]
