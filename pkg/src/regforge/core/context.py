"""Numerical tolerance context.

Carries the active ``NumericsConfig`` through the numerics via a
``contextvars.ContextVar`` so kernels keep pure signatures while each
concurrent task (frequency sweep, perturbation sweep) sees the tolerances
its caller bound. Outside any ``use_tolerances`` block the packaged
defaults apply.
"""

from __future__ import annotations

import contextvars
from concurrent.futures import Executor, Future
from contextlib import contextmanager
from typing import Any, Callable, Iterator, TypeVar

from regforge.core.config import NumericsConfig

#: Thread name prefix used for regforge worker pools.
WORKER_THREAD_PREFIX = "regforge-worker"

_T = TypeVar("_T")

_current: contextvars.ContextVar[NumericsConfig | None] = contextvars.ContextVar(
    "regforge_tolerances",
    default=None,
)
_DEFAULT = NumericsConfig()


def tolerances() -> NumericsConfig:
    """Return the tolerances bound for this task, or the defaults."""
    return _current.get() or _DEFAULT


@contextmanager
def use_tolerances(cfg: NumericsConfig) -> Iterator[NumericsConfig]:
    """Bind ``cfg`` for the duration of the ``with`` block."""
    token = _current.set(cfg)
    try:
        yield cfg
    finally:
        _current.reset(token)


def submit_in_context(
    pool: Executor, fn: Callable[..., _T], /, *args: Any, **kwargs: Any
) -> Future[_T]:
    """Submit ``fn`` to ``pool`` inside a copy of the caller's context.

    ``ThreadPoolExecutor`` threads start with an empty context, so the bound
    tolerances have to travel with the task explicitly.
    """
    ctx = contextvars.copy_context()
    return pool.submit(ctx.run, fn, *args, **kwargs)
