"""Shared test fixtures."""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path

import numpy as np
import pytest

from regforge.control.freqdata import stabilized_matrices
from regforge.control.stabilization import design_K0
from regforge.core.pipeline import DesignResult, run_design
from regforge.core.runconfig import ResolvedRun, parse_run_config, resolve_run
from regforge.model.plant import PlantConfig, discretize
from regforge.model.statespace import StateSpaceModel

ROOT = Path(__file__).resolve().parents[1]
HEAT_CONFIG = ROOT / "configs" / "heat_1d.json"


def heat_data() -> dict:
    """Fresh copy of the heat-equation run file."""
    return copy.deepcopy(json.loads(HEAT_CONFIG.read_text(encoding="utf-8")))


def scalar_system(a: float = -1.0) -> StateSpaceModel:
    """``ẋ = a·x + u``, ``y = x`` with unit weight and no disturbances."""
    return StateSpaceModel(
        A=[[a]], B=[[1.0]], B_d=np.zeros((1, 0)), C=[[1.0]], D=[[0.0]], D_d=np.zeros((1, 0)),
        weights=[1.0],
    )


def write_run_file(path: Path, data: dict) -> Path:
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path


def small_data(n_grid: int = 12) -> dict:
    """Heat run file on a coarse grid, for fast design and time-stepping tests."""
    data = heat_data()
    data["plant"]["n_grid"] = n_grid
    return data


def transmission_zero_data(n_grid: int = 12) -> dict:
    """Run file whose output weights make ``P_K(0)`` vanish for the designed ``K0``.

    ``K0`` depends only on the state and input maps, so it can be computed
    before the output weights are chosen. The plant is damped (reaction −1):
    its steady profile ``g`` is then not constant, so ``C = (g_b, −g_a)``
    still sees the constant mode and ``A`` is Hurwitz, hence detectable.
    """
    data = small_data(n_grid)
    data["plant"]["reaction"] = {"kind": "constant", "value": -1.0}
    sys = discretize(PlantConfig.model_validate(data["plant"]))
    A_K, _ = stabilized_matrices(sys, design_K0(sys))
    g = np.linalg.solve(-A_K, sys.B[:, 0])
    data["plant"]["output_weight"] = [float(g[-1]), float(-g[0])]
    return data


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch: pytest.MonkeyPatch, tmp_path: Path):
    """Strip REGFORGE_* env vars and run each test in its own directory.

    Keeps a developer's ./regforge.toml, .env or REGFORGE_LOG from leaking
    into the settings layers under test.
    """
    for key in list(os.environ):
        if key.startswith("REGFORGE_"):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def plant_cfg() -> PlantConfig:
    return PlantConfig.model_validate(heat_data()["plant"])


@pytest.fixture(scope="session")
def heat_run() -> ResolvedRun:
    return resolve_run(parse_run_config(heat_data()), base_dir=HEAT_CONFIG.parent)


@pytest.fixture(scope="session")
def heat_design(heat_run: ResolvedRun) -> DesignResult:
    return run_design(heat_run)


@pytest.fixture(scope="session")
def small_run() -> ResolvedRun:
    return resolve_run(parse_run_config(small_data()), base_dir=HEAT_CONFIG.parent)


@pytest.fixture(scope="session")
def small_design(small_run: ResolvedRun) -> DesignResult:
    return run_design(small_run)
