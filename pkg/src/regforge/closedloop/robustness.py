"""Conductivity perturbation sweep with the controller held fixed.

Tracking is only claimed for perturbations that keep the closed loop
exponentially stable; destabilized entries are reported without a tracking
verdict.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from regforge.closedloop.simulate import simulate
from regforge.closedloop.system import STAB_FLOOR, assemble_closed_loop, certify_stability
from regforge.control.controller import ControllerRealization
from regforge.core.config import SimulationConfig
from regforge.core.context import WORKER_THREAD_PREFIX, submit_in_context
from regforge.errors import RegforgeError
from regforge.model.plant import PlantConfig, discretize
from regforge.signals.exo import ExoSignalSpec

logger = logging.getLogger("regforge.closedloop")


@dataclass(frozen=True)
class RobustnessEntry:
    delta: float
    abscissa: float | None
    stable: bool
    terminal_error: float | None = None
    # None when the perturbed loop is unstable: no tracking claim is made
    tracking: bool | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "abscissa": self.abscissa,
            "stable": self.stable,
            "terminal_error": self.terminal_error,
            "tracking": self.tracking,
            "detail": self.detail,
        }


@dataclass
class RobustnessReport:
    entries: list[RobustnessEntry] = field(default_factory=list)
    tracking_tol: float = 1e-3

    @property
    def passed(self) -> bool:
        """Every stable perturbation still tracks."""
        return all(e.tracking for e in self.entries if e.stable)

    @property
    def worst_terminal_error(self) -> float:
        errors = [e.terminal_error for e in self.entries if e.terminal_error is not None]
        return max(errors, default=0.0)


def _run_one(
    plant_cfg: PlantConfig,
    controller: ControllerRealization,
    delta: float,
    spec: ExoSignalSpec,
    sim: SimulationConfig,
    stab_floor: float,
    tracking_tol: float,
) -> RobustnessEntry:
    try:
        plant = discretize(plant_cfg.with_conductivity_scale(1.0 + delta))
        cl = assemble_closed_loop(plant, controller)
        abscissa, stable = certify_stability(cl, stab_floor)
    except RegforgeError as exc:
        return RobustnessEntry(delta=delta, abscissa=None, stable=False, detail=str(exc))
    if not stable:
        logger.debug("δ=%+.3g destabilizes the loop (abscissa %.3e)", delta, abscissa)
        return RobustnessEntry(delta=delta, abscissa=abscissa, stable=False)

    try:
        result = simulate(
            cl,
            spec,
            t_final=sim.t_final,
            dt=sim.step,
            method=sim.method,
            window_fraction=sim.window_fraction,
        )
    except RegforgeError as exc:
        return RobustnessEntry(
            delta=delta, abscissa=abscissa, stable=True, tracking=False, detail=str(exc)
        )
    terminal = result.metrics.terminal_error
    return RobustnessEntry(
        delta=delta,
        abscissa=abscissa,
        stable=True,
        terminal_error=terminal,
        tracking=terminal <= tracking_tol,
    )


def robustness_suite(
    plant_cfg: PlantConfig,
    controller: ControllerRealization,
    perturbations,
    spec: ExoSignalSpec,
    *,
    sim: SimulationConfig | None = None,
    stab_floor: float = STAB_FLOOR,
    tracking_tol: float = 1e-3,
    workers: int = 1,
) -> RobustnessReport:
    """Scale the conductivity by ``1 + δ`` for each ``δ`` and re-check the loop.

    Each perturbation re-discretizes the plant on the nominal grid, keeps the
    controller unchanged, certifies stability and simulates the stable ones.
    Failures become report entries, never exceptions.
    """
    sim = sim or SimulationConfig()
    deltas = [float(d) for d in perturbations]
    args = (spec, sim, stab_floor, tracking_tol)
    if workers <= 1 or len(deltas) <= 1:
        entries = [_run_one(plant_cfg, controller, d, *args) for d in deltas]
    else:
        with ThreadPoolExecutor(
            max_workers=min(workers, len(deltas)), thread_name_prefix=WORKER_THREAD_PREFIX
        ) as pool:
            futures = [
                submit_in_context(pool, _run_one, plant_cfg, controller, d, *args) for d in deltas
            ]
            entries = [f.result() for f in futures]
    for entry in entries:
        logger.debug(
            "δ=%+.3g abscissa=%s terminal=%s", entry.delta, entry.abscissa, entry.terminal_error
        )
    return RobustnessReport(entries=entries, tracking_tol=tracking_tol)
