"""Progress events of the design and verification pipelines.

``run_design`` and ``run_verification`` accept an optional callback and call it
once per stage. The CLI logs them; a notebook can collect them into a list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable


@dataclass(frozen=True)
class PipelineEvent:
    """One stage transition.

    ``progress`` is the fraction of the whole pipeline done when the stage
    starts (1.0 on the closing event). ``data`` carries certificates or check
    values when the stage has any.
    """

    stage: str
    progress: float
    message: str
    data: dict[str, Any] | None = field(default=None)


EventCallback = Callable[[PipelineEvent], None]


def emit(callback: EventCallback | None, stage: str, progress: float, message: str, **data: Any) -> None:
    if callback is None:
        return
    callback(PipelineEvent(stage, progress, message, data or None))
