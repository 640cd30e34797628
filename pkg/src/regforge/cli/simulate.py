"""regforge simulate command: closed-loop trajectory to CSV."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Optional

import typer

from regforge.cli.utils import default_output, exit_on_error, load_run
from regforge.core.pipeline import run_simulation
from regforge.storage.controller_file import load_controller
from regforge.storage.trajectory import (
    states_path,
    write_metrics,
    write_states_csv,
    write_trajectory_csv,
)
from regforge.utils.console import console, saved


def simulate(
    config: Annotated[
        Path,
        typer.Option("--config", "-c", help="Run file (JSON)."),
    ],
    controller: Annotated[
        Path,
        typer.Option("--controller", help="Controller file written by 'regforge design'."),
    ],
    out: Annotated[
        Optional[Path],
        typer.Option("--out", "-o", help="Trajectory CSV. Default: <config>.trajectory.csv"),
    ] = None,
    force: Annotated[
        bool,
        typer.Option("--force", help="Accept a controller designed for another plant."),
    ] = False,
    dt: Annotated[
        Optional[float],
        typer.Option("--dt", help="Time step (overrides the run file)."),
    ] = None,
    t_final: Annotated[
        Optional[float],
        typer.Option("--t-final", help="Final time (overrides the run file)."),
    ] = None,
) -> None:
    """Simulate the closed loop and write the trajectory and its metrics."""
    with exit_on_error():
        run = load_run(config, dt=dt, t_final=t_final)
        ctrl, _ = load_controller(controller)
        cl, result = run_simulation(run, ctrl, force=force)
        path = default_output(
            run, "trajectory", out, config.with_name(f"{config.stem}.trajectory.csv")
        )
        write_trajectory_csv(path, result)
        metrics = write_metrics(path, result, plant_hash=run.plant_hash)
        states = write_states_csv(states_path(path), result, cl)
    saved(*(p for p in (path, metrics, states) if p is not None))
    m = result.metrics
    console.print(
        f"[dim]terminal error {m.terminal_error:.3e}, decay rate {m.decay_rate:.3g}[/dim]"
    )
