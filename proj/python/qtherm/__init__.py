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

"""Python bindings for the qtherm thermalization toolkit."""

import json as _json
import os as _os

from ._qtherm import *  # noqa: F401,F403
from ._qtherm import __version__, _build_model, _run_experiment


def build_model(kind, **params):
    """Builds a model from its config section, e.g. build_model("oscillator", n_sites=3)."""
    section = dict(params)
    section["kind"] = kind
    return _build_model(_json.dumps(section))


def run_experiment(config, out_dir, seed=None, threads=None):
    """Runs a config given as a dict or a path to a JSON file."""
    if isinstance(config, (str, _os.PathLike)):
        with open(config, encoding="utf-8") as fh:
            config = _json.load(fh)
    return _run_experiment(_json.dumps(config), str(out_dir), seed, threads)
