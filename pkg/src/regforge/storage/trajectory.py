"""Trajectory CSV and metrics JSON.

Columns are ``t,y,y_ref,e,u`` for single channels and ``y_1,…`` otherwise.
Floats are written with ``repr`` so every value reads back bit-identical.
State snapshots, when kept, go to a sibling ``<stem>.states.csv``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from regforge.closedloop.simulate import SimResult
from regforge.closedloop.system import ClosedLoopSystem
from regforge.utils.hashing import atomic_write_text


def _names(prefix: str, count: int) -> list[str]:
    return [prefix] if count == 1 else [f"{prefix}_{i + 1}" for i in range(count)]


def _fmt(value) -> str:
    return repr(float(value))


def trajectory_columns(result: SimResult) -> list[str]:
    p, m = result.y.shape[1], result.u.shape[1]
    return (
        ["t"]
        + _names("y", p)
        + _names("y_ref", p)
        + _names("e", p)
        + _names("u", m)
    )


def write_trajectory_csv(path: Path, result: SimResult) -> Path:
    """Write ``t, y, y_ref, e, u`` per time step."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = trajectory_columns(result)
    table = np.column_stack([result.t, result.y, result.y_ref, result.e, result.u])
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in table:
            writer.writerow({name: _fmt(v) for name, v in zip(columns, row)})
    return path


def states_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.states.csv")


def write_states_csv(path: Path, result: SimResult, cl: ClosedLoopSystem) -> Path | None:
    """Write kept state snapshots as ``t, x_*, z_*, xhat_*``; ``None`` if none were kept."""
    if result.snapshots.shape[0] == 0:
        return None
    n_obs = cl.dim - cl.n_plant - cl.n_im
    columns = (
        ["t"]
        + [f"x_{i}" for i in range(cl.n_plant)]
        + [f"z_{i}" for i in range(cl.n_im)]
        + [f"xhat_{i}" for i in range(n_obs)]
    )
    table = np.column_stack([result.snapshot_times, result.snapshots])
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in table:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_trajectory_csv(path: Path) -> dict[str, np.ndarray]:
    """Read a trajectory CSV back into one array per column."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        return {}
    return {name: np.array([float(r[name]) for r in rows]) for name in rows[0]}


def metrics_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.name}.metrics.json")


def write_metrics(path: Path, result: SimResult, **extra) -> Path:
    """Write the run metrics next to the CSV as ``<csv>.metrics.json``."""
    payload = {
        "method": result.method,
        "dt": result.dt,
        "t_final": float(result.t[-1]),
        "steps": len(result.t) - 1,
        **result.metrics.to_dict(),
        **extra,
    }
    return atomic_write_text(metrics_path(path), json.dumps(payload, indent=2) + "\n")
