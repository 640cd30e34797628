"""regforge design command: build the controller for a run file."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Optional

import typer

from regforge.cli.utils import default_output, exit_on_error, load_run, log_event
from regforge.core.pipeline import run_design
from regforge.storage.controller_file import save_controller
from regforge.utils.console import saved


def design(
    config: Annotated[
        Path,
        typer.Option("--config", "-c", help="Run file (JSON)."),
    ],
    out: Annotated[
        Optional[Path],
        typer.Option("--out", "-o", help="Controller file. Default: <config>.controller.json"),
    ] = None,
) -> None:
    """Design the internal-model controller and print its certificates.

    Two defaults differ from the plain construction. K1 moves the internal
    model left of -design.im_margin (0.5; 0 gives the plain LQR gain).
    Lyapunov equations use the Kronecker solve only up to numerics.kron_max_dim
    (24) states and Bartels-Stewart above. Set either in regforge.toml, through
    REGFORGE_DESIGN__IM_MARGIN / REGFORGE_NUMERICS__KRON_MAX_DIM, or in the run
    file.
    """
    with exit_on_error():
        run = load_run(config)
        result = run_design(run, on_event=log_event)
        path = default_output(
            run, "controller", out, config.with_name(f"{config.stem}.controller.json")
        )
        save_controller(
            path,
            result.controller,
            result.plant.weights,
            points=result.points,
            certificates=result.certificates,
        )
    saved(path)
