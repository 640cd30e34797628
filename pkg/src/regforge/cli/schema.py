"""regforge schema command: JSON Schema of the run file."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Optional

import typer

from regforge.core.runconfig import run_config_schema
from regforge.utils.console import saved
from regforge.utils.hashing import atomic_write_text


def schema(
    out: Annotated[
        Optional[Path],
        typer.Option("--out", "-o", help="Write to a file instead of stdout."),
    ] = None,
) -> None:
    """Print the JSON Schema that run files are validated against."""
    text = json.dumps(run_config_schema(), indent=2) + "\n"
    if out is None:
        typer.echo(text, nl=False)
        return
    atomic_write_text(out, text)
    saved(out)
