"""regforge verify command: machine-check a designed controller."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Optional

import typer

from regforge.cli.utils import (
    default_output,
    exit_on_error,
    load_run,
    log_event,
    print_report_table,
)
from regforge.core.pipeline import run_verification
from regforge.errors import ExitCode
from regforge.storage.controller_file import load_controller
from regforge.utils.console import error, saved
from regforge.utils.hashing import atomic_write_text


def verify(
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
        typer.Option("--out", "-o", help="Report JSON. Default: <config>.report.json"),
    ] = None,
    force: Annotated[
        bool,
        typer.Option("--force", help="Accept a controller designed for another plant."),
    ] = False,
) -> None:
    """Run stability, blocking-zero, identity, route and robustness checks.

    Exits with 3 if any enforced check fails.
    """
    with exit_on_error():
        run = load_run(config)
        ctrl, _ = load_controller(controller)
        report = run_verification(run, ctrl, force=force, on_event=log_event)
        path = default_output(run, "report", out, config.with_name(f"{config.stem}.report.json"))
        atomic_write_text(path, json.dumps(report.to_dict(), indent=2) + "\n")

    print_report_table(report)
    saved(path)
    if not report.passed:
        error("checks failed: " + ", ".join(c.name for c in report.failures))
        raise typer.Exit(ExitCode.VERIFICATION)
