"""Closed-loop system of the plant and an error-feedback controller.

With plant ``(A, B, B_d, C, D, D_d)`` and controller ``(𝒢₁, 𝒢₂, K)`` the
closed-loop state is ``x_e = (x, z₁, x̂)`` and the exogenous input
``w_e = (w_dist, y_ref)``::

    A_e = [[A, B·K], [𝒢₂·C, 𝒢₁ + 𝒢₂·D·K]]
    B_e = [[B_d, 0], [𝒢₂·D_d, −𝒢₂]]
    C_e = [C, D·K],   D_e = [D_d, −I]
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from regforge.control.controller import ControllerRealization
from regforge.errors import DimensionMismatch, ResolventPole, SingularMatrix
from regforge.model.statespace import StateSpaceModel
from regforge.numerics.linalg import eigenvalues, solve_linear

logger = logging.getLogger("regforge.closedloop")

# Default certification floor: the abscissa must lie at or below -STAB_FLOOR
STAB_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class ClosedLoopSystem:
    A_e: np.ndarray
    B_e: np.ndarray
    C_e: np.ndarray
    D_e: np.ndarray
    # Output y and control u as maps of (x_e, w_e)
    C_y: np.ndarray
    D_y: np.ndarray
    C_u: np.ndarray
    n_plant: int
    n_controller: int
    n_im: int = 0
    n_d: int = 0

    @property
    def dim(self) -> int:
        return self.A_e.shape[0]

    @property
    def p(self) -> int:
        return self.C_e.shape[0]

    @property
    def plant_slice(self) -> slice:
        return slice(0, self.n_plant)

    @property
    def im_slice(self) -> slice:
        return slice(self.n_plant, self.n_plant + self.n_im)

    @property
    def observer_slice(self) -> slice:
        return slice(self.n_plant + self.n_im, self.dim)


def assemble_closed_loop_flat(
    plant: StateSpaceModel, G1, G2, K, *, n_im: int = 0
) -> ClosedLoopSystem:
    """Closed loop of ``plant`` with the controller ``ż = 𝒢₁z + 𝒢₂e``, ``u = Kz``.

    Raises:
        DimensionMismatch: If the controller does not fit the plant.
    """
    G1 = np.asarray(G1, dtype=float)
    G2 = np.asarray(G2, dtype=float)
    K = np.asarray(K, dtype=float)
    nc = G1.shape[0]
    if G1.shape != (nc, nc) or G2.shape != (nc, plant.p) or K.shape != (plant.m, nc):
        raise DimensionMismatch(
            f"controller shapes G1{G1.shape} G2{G2.shape} K{K.shape} do not fit "
            f"a plant with m={plant.m}, p={plant.p}"
        )
    n, p, n_d = plant.n, plant.p, plant.n_d

    A_e = np.block([[plant.A, plant.B @ K], [G2 @ plant.C, G1 + G2 @ plant.D @ K]])
    B_e = np.block([[plant.B_d, np.zeros((n, p))], [G2 @ plant.D_d, -G2]])
    C_e = np.hstack([plant.C, plant.D @ K])
    D_e = np.hstack([plant.D_d, -np.eye(p)])
    D_y = np.hstack([plant.D_d, np.zeros((p, p))])
    C_u = np.hstack([np.zeros((plant.m, n)), K])
    logger.debug("Closed loop assembled: dim=%d (plant %d, controller %d)", n + nc, n, nc)
    return ClosedLoopSystem(
        A_e=A_e,
        B_e=B_e,
        C_e=C_e,
        D_e=D_e,
        C_y=C_e.copy(),
        D_y=D_y,
        C_u=C_u,
        n_plant=n,
        n_controller=nc,
        n_im=n_im,
        n_d=n_d,
    )


def assemble_closed_loop(
    plant: StateSpaceModel, controller: ControllerRealization
) -> ClosedLoopSystem:
    """Closed loop of ``plant`` with the internal-model controller."""
    if controller.n != plant.n:
        raise DimensionMismatch(
            f"controller observer has dimension {controller.n}, plant has {plant.n}"
        )
    G1, G2, K = controller.flat
    return assemble_closed_loop_flat(plant, G1, G2, K, n_im=controller.internal_model.dim)


def certify_stability(cl: ClosedLoopSystem, stab_floor: float = STAB_FLOOR) -> tuple[float, bool]:
    """Return ``(abscissa, abscissa ≤ −stab_floor)`` for ``A_e``."""
    abscissa = float(np.max(eigenvalues(cl.A_e).real))
    return abscissa, abscissa <= -stab_floor


def error_transfer_at(cl: ClosedLoopSystem, omega: float) -> np.ndarray:
    """``C_e(iω − A_e)⁻¹B_e + D_e``, the transfer from ``w_e`` to ``e``.

    Raises:
        ResolventPole: If ``iω`` is numerically an eigenvalue of ``A_e``.
    """
    M = 1j * omega * np.eye(cl.dim) - cl.A_e
    try:
        X = solve_linear(M, cl.B_e.astype(complex))
    except SingularMatrix as exc:
        raise ResolventPole(f"iω = {omega}i lies in the spectrum of A_e") from exc
    return cl.C_e @ X + cl.D_e


def blocking_residuals(cl: ClosedLoopSystem, frequencies) -> dict[float, float]:
    """``‖T_e(iω_k)‖ / max(‖B_e‖, 1)`` at every frequency.

    ``T_e(−iω)`` is the conjugate of ``T_e(iω)`` so one evaluation covers both.
    """
    scale = max(float(np.linalg.norm(cl.B_e, 2)), 1.0)
    return {
        float(w): float(np.linalg.norm(error_transfer_at(cl, float(w)), 2)) / scale
        for w in frequencies
    }
