"""Terminal output for the CLI.

Tables and summaries are printed on ``console`` (stdout) so they can be piped.
Status lines go through the ``regforge`` logger and therefore reach stderr and
the debug log file alike.
"""

from __future__ import annotations

import logging
from pathlib import Path

from rich.console import Console

console = Console()

_status = logging.getLogger("regforge")


def stage(name: str, detail: str = "") -> None:
    """Announce a pipeline stage (discretize, stabilize, ...)."""
    suffix = f"  [dim]{detail}[/dim]" if detail else ""
    _status.info("[bold cyan]%s[/bold cyan]%s", name, suffix)


def certificate(name: str, value: float, passed: bool) -> None:
    """One design certificate, marked ok/FAIL."""
    mark = "[green]ok[/green]" if passed else "[red]FAIL[/red]"
    _status.info("  %-24s %.3e  %s", name, value, mark)


def error(message: str) -> None:
    _status.error("[bold red]error:[/bold red] %s", message)


def saved(*paths: Path | str) -> None:
    """Report written output files, one per line."""
    for path in paths:
        _status.info("[green]wrote[/green] %s", path)
