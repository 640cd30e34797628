"""Time stepping of the closed loop and trajectory metrics.

Two steppers share one output path:

- ``cn``: Crank–Nicolson with the exogenous input evaluated at half steps,
  ``(I − ½hA_e)x⁺ = (I + ½hA_e)x + h·B_e·w_e(t + ½h)``, one LU factorization
  for the whole run.
- ``exact``: the closed loop augmented with the exosystem that generates
  ``w_e``, advanced by one matrix exponential per step. Exact up to rounding
  and used to cross-check the CN trajectories.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.integrate import trapezoid

from regforge.closedloop.system import ClosedLoopSystem
from regforge.errors import DimensionMismatch, InvalidConfig, SingularMatrix, StepRejected
from regforge.numerics.linalg import factorize, matrix_exponential
from regforge.signals.exo import ExoSignalSpec

logger = logging.getLogger("regforge.closedloop")

Method = Literal["cn", "exact"]

# The decay fit ignores the envelope below this multiple of its terminal value
_FIT_FLOOR = 100.0


@dataclass(frozen=True)
class SimMetrics:
    """Summary of the tracking error over a run.

    Attributes:
        terminal_error: ``sup ‖e(t)‖`` over the final window.
        decay_rate: Fitted exponential rate ``α̂`` of the error envelope.
        weighted_integral: ``∫ e^{2α̂t}‖e(t)‖² dt`` over the run.
        window_start: First time in the final window.
    """

    terminal_error: float
    decay_rate: float
    weighted_integral: float
    window_start: float

    def to_dict(self) -> dict[str, float]:
        return {
            "terminal_error": self.terminal_error,
            "decay_rate": self.decay_rate,
            "weighted_integral": self.weighted_integral,
            "window_start": self.window_start,
        }


@dataclass(frozen=True, eq=False)
class SimResult:
    t: np.ndarray
    y: np.ndarray
    y_ref: np.ndarray
    e: np.ndarray
    u: np.ndarray
    final_state: np.ndarray
    metrics: SimMetrics
    method: str = "cn"
    snapshot_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    snapshots: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0


def _uniform_grid(t_final: float, dt: float) -> tuple[np.ndarray, float]:
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidConfig(f"time step must be positive, got {dt}")
    if not (t_final > 0 and math.isfinite(t_final)):
        raise InvalidConfig(f"final time must be positive, got {t_final}")
    steps = max(1, math.ceil(t_final / dt - 1e-9))
    h = t_final / steps
    if abs(h - dt) > 1e-12 * dt:
        logger.debug("Time step adjusted from %.6g to %.6g for a uniform grid", dt, h)
    return np.linspace(0.0, t_final, steps + 1), h


def _step_cn(
    cl: ClosedLoopSystem, spec: ExoSignalSpec, x0: np.ndarray, t: np.ndarray, h: float, keep
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    eye = np.eye(cl.dim)
    try:
        lhs = factorize(eye - 0.5 * h * cl.A_e)
    except SingularMatrix as exc:
        raise StepRejected(f"Crank–Nicolson matrix is singular at h = {h:.3e}") from exc
    rhs_map = eye + 0.5 * h * cl.A_e
    forcing = h * (spec.eval_exogenous(t[:-1] + 0.5 * h, cl.n_d) @ cl.B_e.T)

    states = np.empty((len(t), cl.dim))
    states[0] = x0
    snaps = [x0.copy()] if keep(0) else []
    x = x0
    for k in range(len(t) - 1):
        x = lhs.solve(rhs_map @ x + forcing[k])
        if not np.all(np.isfinite(x)):
            raise StepRejected(f"non-finite state at t = {t[k + 1]:.4g}")
        states[k + 1] = x
        if keep(k + 1):
            snaps.append(x.copy())
    return states, x, snaps


def _step_exact(
    cl: ClosedLoopSystem, spec: ExoSignalSpec, x0: np.ndarray, t: np.ndarray, h: float, keep
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    S, E, zeta0 = spec.exosystem(cl.n_d)
    n_x, n_s = cl.dim, S.shape[0]
    M = np.block([[cl.A_e, cl.B_e @ E], [np.zeros((n_s, n_x)), S]])
    Phi = matrix_exponential(M, h)

    states = np.empty((len(t), n_x))
    aug = np.concatenate([x0, zeta0])
    states[0] = x0
    snaps = [x0.copy()] if keep(0) else []
    for k in range(len(t) - 1):
        aug = Phi @ aug
        if not np.all(np.isfinite(aug)):
            raise StepRejected(f"non-finite state at t = {t[k + 1]:.4g}")
        states[k + 1] = aug[:n_x]
        if keep(k + 1):
            snaps.append(aug[:n_x].copy())
    return states, aug[:n_x], snaps


def error_metrics(t: np.ndarray, e: np.ndarray, window_fraction: float = 0.2) -> SimMetrics:
    """Terminal error, fitted decay rate and weighted error integral.

    The envelope is the suffix supremum of ``‖e‖``. ``α̂`` is minus the
    least-squares slope of its logarithm over the samples where it stays
    above ``100×`` its terminal value; zero when the error vanishes.
    """
    norms = np.linalg.norm(np.reshape(e, (len(t), -1)), axis=1)
    window_start = float(t[-1] - window_fraction * (t[-1] - t[0]))
    in_window = t >= window_start - 1e-12
    terminal = float(np.max(norms[in_window]))

    envelope = np.maximum.accumulate(norms[::-1])[::-1]
    rate = 0.0
    if envelope[0] > 0.0:
        mask = envelope > _FIT_FLOOR * envelope[-1]
        if np.count_nonzero(mask) >= 2:
            slope = np.polyfit(t[mask], np.log(envelope[mask]), 1)[0]
            rate = max(-float(slope), 0.0)
    integral = float(trapezoid(np.exp(2.0 * rate * t) * norms**2, t))
    return SimMetrics(
        terminal_error=terminal,
        decay_rate=rate,
        weighted_integral=integral,
        window_start=window_start,
    )


def simulate(
    cl: ClosedLoopSystem,
    spec: ExoSignalSpec,
    x_e0=None,
    t_final: float = 30.0,
    dt: float | None = None,
    *,
    method: Method = "cn",
    window_fraction: float = 0.2,
    snapshot_every: int | None = None,
) -> SimResult:
    """Simulate ``ẋ_e = A_e x_e + B_e w_e(t)`` and record ``y``, ``y_ref``, ``e``, ``u``.

    Stability of the closed loop is not required.

    Args:
        x_e0: Initial closed-loop state; zero when omitted.
        dt: Time step, default ``1e-3·t_final``. Rounded down so the grid
            ends exactly at ``t_final``.
        method: ``"cn"`` or ``"exact"``.
        snapshot_every: Keep the full state every this many steps.

    Raises:
        StepRejected: If the stepping matrix is singular or the state blows
            up to non-finite values.
        ExponentialOverflow: For ``method="exact"`` with too large a step.
    """
    spec.check_dimensions(cl.p, cl.n_d)
    t, h = _uniform_grid(t_final, 1e-3 * t_final if dt is None else dt)
    x0 = np.zeros(cl.dim) if x_e0 is None else np.asarray(x_e0, dtype=float).ravel()
    if x0.shape != (cl.dim,):
        raise DimensionMismatch(f"initial state has length {x0.size}, closed loop has {cl.dim}")

    def keep(k: int) -> bool:
        return snapshot_every is not None and k % snapshot_every == 0

    logger.debug("Simulating %d steps of h=%.4g with %s", len(t) - 1, h, method)
    stepper = _step_exact if method == "exact" else _step_cn
    states, final, snaps = stepper(cl, spec, x0, t, h, keep)

    w = spec.eval_exogenous(t, cl.n_d)
    e = states @ cl.C_e.T + w @ cl.D_e.T
    y = states @ cl.C_y.T + w @ cl.D_y.T
    u = states @ cl.C_u.T
    y_ref = w[:, cl.n_d :]
    snapshot_times = t[[k for k in range(len(t)) if keep(k)]] if snapshot_every else np.zeros(0)
    return SimResult(
        t=t,
        y=y,
        y_ref=y_ref,
        e=e,
        u=u,
        final_state=final,
        metrics=error_metrics(t, e, window_fraction),
        method=method,
        snapshot_times=snapshot_times,
        snapshots=np.array(snaps) if snaps else np.zeros((0, cl.dim)),
    )


def cn_convergence_order(
    cl: ClosedLoopSystem, spec: ExoSignalSpec, x_e0=None, t_final: float = 1.0, dt: float = 0.01
) -> float:
    """Observed order of CN from terminal states at ``dt``, ``dt/2`` and ``dt/4``."""
    finals = [
        simulate(cl, spec, x_e0, t_final, dt / 2**k, method="cn").final_state for k in range(3)
    ]
    coarse = float(np.linalg.norm(finals[0] - finals[1]))
    fine = float(np.linalg.norm(finals[1] - finals[2]))
    if fine == 0.0:
        return math.inf
    return math.log2(coarse / fine)
