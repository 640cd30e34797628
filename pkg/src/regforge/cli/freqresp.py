"""regforge freqresp command: transfer-function table at chosen frequencies."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Optional

import typer

from regforge.cli.utils import exit_on_error, load_run, print_freqresp_table
from regforge.core.pipeline import freqresp_rows


def freqresp(
    config: Annotated[
        Path,
        typer.Option("--config", "-c", help="Run file (JSON)."),
    ],
    omega: Annotated[
        Optional[list[float]],
        typer.Option("--omega", "-w", help="Frequency (repeatable)."),
    ] = None,
) -> None:
    """Print P(iω), P_K(iω) by both routes and G_K(iω).

    A pole of the open-loop resolvent is flagged on its row.
    """
    with exit_on_error():
        run = load_run(config)
        rows = freqresp_rows(run, omega or [])
    print_freqresp_table(rows)
