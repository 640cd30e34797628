"""Stabilizing state feedback ``K0`` and output injection ``L`` by LQR.

State costs are weighted by the quadrature matrix ``W`` so the LQR cost
approximates ``∫|x|²dξ`` and the gains converge under grid refinement. The
observer gain solves the dual Riccati equation, which makes it the weighted
adjoint of the state-feedback design on ``sys.dual()``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from regforge.errors import NotDetectable, NotStabilizable
from regforge.model.statespace import StateSpaceModel
from regforge.numerics.linalg import as_matrix, eigenvalues
from regforge.numerics.matrix_equations import solve_care

logger = logging.getLogger("regforge.control")

# Relative singular-value threshold for the Hautus rank test
_HAUTUS_RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StabilizingGains:
    K0: np.ndarray
    L: np.ndarray
    margin_feedback: float
    margin_injection: float


def is_hurwitz(M) -> tuple[bool, float]:
    """Return ``(abscissa < 0, abscissa)`` for the spectral abscissa of ``M``."""
    abscissa = float(np.max(eigenvalues(M).real))
    return abscissa < 0.0, abscissa


def design_K0(sys: StateSpaceModel, q_weight: float = 1.0, r_weight: float = 1.0) -> np.ndarray:
    """LQR state feedback ``K0 = −R⁻¹BᵀX`` with ``X = care(A, B, q·W, r·I)``.

    Raises:
        NotStabilizable: If the Riccati iteration cannot start or the
            resulting ``A + B·K0`` is not Hurwitz.
    """
    X = solve_care(sys.A, sys.B, q_weight * sys.weight_matrix, r_weight * np.eye(sys.m))
    K0 = -(sys.B.T @ X) / r_weight
    ok, abscissa = is_hurwitz(sys.A + sys.B @ K0)
    if not ok:
        raise NotStabilizable(f"A + B·K0 has abscissa {abscissa:.3e}")
    return K0


def design_L(sys: StateSpaceModel, q_weight: float = 1.0, r_weight: float = 1.0) -> np.ndarray:
    """Output injection ``L = −XCᵀR⁻¹`` from ``care(Aᵀ, Cᵀ, q·W⁻¹, r·I)``.

    Raises:
        NotDetectable: If ``(A, C)`` admits no stabilizing injection.
    """
    try:
        X = solve_care(
            sys.A.T, sys.C.T, q_weight * np.diag(1.0 / sys.weights), r_weight * np.eye(sys.p)
        )
    except NotStabilizable as exc:
        raise NotDetectable(f"(A, C) is not detectable: {exc.message}") from exc
    L = -(X @ sys.C.T) / r_weight
    ok, abscissa = is_hurwitz(sys.A + L @ sys.C)
    if not ok:
        raise NotDetectable(f"A + L·C has abscissa {abscissa:.3e}")
    return L


def design_stabilizing_gains(
    sys: StateSpaceModel,
    q_weight: float = 1.0,
    r_weight: float = 1.0,
    observer_q_weight: float = 1.0,
    observer_r_weight: float = 1.0,
) -> StabilizingGains:
    """Design both gains and record their stability margins."""
    K0 = design_K0(sys, q_weight, r_weight)
    L = design_L(sys, observer_q_weight, observer_r_weight)
    _, feedback = is_hurwitz(sys.A + sys.B @ K0)
    _, injection = is_hurwitz(sys.A + L @ sys.C)
    logger.debug("margin_feedback=%.4g margin_injection=%.4g", -feedback, -injection)
    return StabilizingGains(K0=K0, L=L, margin_feedback=-feedback, margin_injection=-injection)


def hautus_controllable(G1, B1) -> bool:
    """``rank[λI − G1, B1]`` is full at every eigenvalue ``λ`` of ``G1``."""
    G1 = as_matrix(G1, "G1", square=True)
    B1 = as_matrix(B1, "B1")
    n = G1.shape[0]
    scale = max(float(np.linalg.norm(G1, 2)), float(np.linalg.norm(B1, 2)), 1.0)
    for lam in eigenvalues(G1):
        pencil = np.hstack([lam * np.eye(n) - G1, B1.astype(complex)])
        sigma = np.linalg.svd(pencil, compute_uv=False)
        if sigma[n - 1] <= _HAUTUS_RANK_TOL * scale:
            return False
    return True


def k0_kernel(K0: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Sampled kernel ``k₀`` with ``K0·x = −Σ wᵢ xᵢ k₀(ξᵢ)``."""
    return -np.asarray(K0) / np.asarray(weights)[None, :]
