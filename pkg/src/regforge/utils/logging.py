"""Logging setup for regforge.

One ``regforge`` logger tree. The CLI callback calls ``setup_logging()``,
which attaches a Rich handler on stderr; library use without the CLI stays
silent unless the caller configures logging itself.

Environment:
    ``REGFORGE_LOG``: level of the terminal output (default INFO).
    ``REGFORGE_LOG_FILE``: additionally write everything at DEBUG to this file.
    ``REGFORGE_NUMERICS_LOG``: level of ``regforge.numerics`` alone. Newton
        iterations and solver residuals log there at DEBUG and drown the
        pipeline output otherwise.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path

from rich.console import Console
from rich.logging import RichHandler

ROOT_LOGGER = "regforge"
NUMERICS_LOGGER = "regforge.numerics"

_FILE_FORMAT = "%(asctime)s %(levelname)-8s [%(name)s] %(message)s"
_stderr = Console(stderr=True)
_configured = False


def _level(var: str, default: int) -> int:
    name = os.environ.get(var)
    if not name:
        return default
    return getattr(logging, name.upper(), default)


def _file_handler(path: str) -> logging.Handler:
    log_path = Path(path).expanduser().resolve()
    log_path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_path, encoding="utf-8")
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(_FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    return handler


def setup_logging() -> None:
    """Attach the terminal (and optional file) handler once per process."""
    global _configured
    if _configured:
        return
    _configured = True

    root = logging.getLogger(ROOT_LOGGER)
    terminal = _level("REGFORGE_LOG", logging.INFO)
    if root.handlers:
        root.setLevel(terminal)
        return

    rich = RichHandler(
        console=_stderr, show_time=False, show_level=False, show_path=False, markup=True
    )
    rich.setLevel(terminal)
    root.addHandler(rich)
    root.setLevel(terminal)

    log_file = os.environ.get("REGFORGE_LOG_FILE")
    if log_file:
        root.addHandler(_file_handler(log_file))
        root.setLevel(logging.DEBUG)

    numerics = os.environ.get("REGFORGE_NUMERICS_LOG")
    if numerics:
        logging.getLogger(NUMERICS_LOGGER).setLevel(_level("REGFORGE_NUMERICS_LOG", terminal))


def _terminal_level(level: int) -> None:
    root = logging.getLogger(ROOT_LOGGER)
    if not any(isinstance(h, logging.FileHandler) for h in root.handlers):
        root.setLevel(level)
    for handler in root.handlers:
        if isinstance(handler, RichHandler):
            handler.setLevel(level)


def set_verbose(enabled: bool) -> None:
    """Terminal output at DEBUG (True) or INFO (False)."""
    _terminal_level(logging.DEBUG if enabled else logging.INFO)


def set_quiet(enabled: bool) -> None:
    """Terminal output at WARNING and above only (True) or INFO (False)."""
    _terminal_level(logging.WARNING if enabled else logging.INFO)
