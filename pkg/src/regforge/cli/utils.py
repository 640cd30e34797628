"""Shared CLI utilities."""

from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import typer
from rich.table import Table

from regforge.core.events import PipelineEvent
from regforge.core.runconfig import ResolvedRun, load_run_config
from regforge.errors import RegforgeError
from regforge.utils.console import console, error

_LOGGER = logging.getLogger("regforge.cli")


@contextmanager
def exit_on_error() -> Iterator[None]:
    """Print a ``RegforgeError`` as ``stage: message`` and exit with its code."""
    try:
        yield
    except RegforgeError as exc:
        error(str(exc))
        raise typer.Exit(exc.exit_code) from exc


def load_run(
    config: Path, *, dt: float | None = None, t_final: float | None = None
) -> ResolvedRun:
    """Load a run file with the ``--dt``/``--t-final`` flags applied."""
    return load_run_config(config, **{"simulation.dt": dt, "simulation.t_final": t_final})


def default_output(run: ResolvedRun, name: str, explicit: Path | None, fallback: Path) -> Path:
    return run.output_path(name, explicit) or fallback


def log_event(event: PipelineEvent) -> None:
    _LOGGER.debug("[%3.0f%%] %s: %s", event.progress * 100, event.stage, event.message)


def _complex(z: complex | None) -> str:
    if z is None:
        return "[dim]pole[/dim]"
    return f"{z.real:+.6e} {z.imag:+.6e}i"


def print_freqresp_table(rows) -> None:
    """Rich table of ``P``, ``P_K`` (both routes) and ``G_K`` per frequency."""
    table = Table(title="Frequency response")
    table.add_column("ω", justify="right")
    table.add_column("P(iω)")
    table.add_column("P_K(iω) direct")
    table.add_column("P_K(iω) reduced")
    table.add_column("G_K(iω)")
    table.add_column("disagreement", justify="right")
    for row in rows:
        diff = "[yellow]pole[/yellow]" if row.pole else f"{row.disagreement:.2e}"
        table.add_row(
            f"{row.omega:g}",
            _complex(row.P),
            _complex(row.PK_direct),
            _complex(row.PK_reduced),
            _complex(row.G_K),
            diff,
        )
    console.print(table)


def print_report_table(report) -> None:
    """Rich table of verification checks."""
    table = Table(title="Verification")
    table.add_column("Check")
    table.add_column("Value", justify="right")
    table.add_column("Threshold", justify="right")
    table.add_column("Status")
    for check in report.checks:
        if check.skipped:
            status = "[yellow]skipped[/yellow]"
        elif not check.enforced:
            status = "[dim]info[/dim]"
        else:
            status = "[green]pass[/green]" if check.passed else "[red]fail[/red]"
        value = "" if check.value is None else f"{check.value:.3e}"
        threshold = "" if check.threshold is None else f"{check.threshold:.1e}"
        table.add_row(check.name, value, threshold, status)
    console.print(table)
    passed = sum(c.passed for c in report.checks)
    console.print(f"\n[bold]{passed}/{len(report.checks)} checks passed[/bold]")
