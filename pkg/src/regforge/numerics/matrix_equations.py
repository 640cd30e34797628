"""Lyapunov, Sylvester and Riccati solvers.

``solve_care`` is a Newton–Kleinman iteration: every step is one Lyapunov
solve for the current closed-loop matrix, started from a gain produced by
modal pre-stabilization. Small Lyapunov and Sylvester equations go through
the Kronecker linear system; larger ones through Bartels–Stewart.

Sign conventions: gains are returned for ``A + B·F`` (so the LQR gain is
``F = −R⁻¹BᵀX``), and the Lyapunov equation is ``AᵀX + XA + Q = 0``.
"""

from __future__ import annotations

import logging
import warnings
from typing import Literal

import numpy as np
import scipy.linalg as sla
from scipy.signal import place_poles

from regforge.core.context import tolerances
from regforge.errors import (
    ConvergenceFailure,
    DimensionMismatch,
    InvalidMatrix,
    NotHurwitz,
    NotStabilizable,
    SingularMatrix,
)
from regforge.numerics.linalg import as_matrix, eigenvalues, solve_linear

logger = logging.getLogger("regforge.numerics")

Normalization = Literal["backward", "rhs"]

# Sylvester systems up to this many unknowns go through the Kronecker solve
_KRON_MAX_UNKNOWNS = 2500

# Pre-stabilization targets: -1, -1.1, -1.2, ... (distinct for single inputs)
_PLACE_FIRST = -1.0
_PLACE_STEP = -0.1


def _symmetric(Q: np.ndarray, name: str) -> np.ndarray:
    scale = max(float(np.linalg.norm(Q)), 1.0)
    if float(np.linalg.norm(Q - Q.T)) > tolerances().symmetry_tol * scale:
        raise InvalidMatrix(f"{name} must be symmetric")
    return 0.5 * (Q + Q.T)


def lyapunov_residual(
    A: np.ndarray, X: np.ndarray, Q: np.ndarray, *, relative_to: Normalization = "backward"
) -> float:
    """Residual of ``AᵀX + XA + Q = 0``.

    ``"backward"`` divides by ``‖Q‖ + 2‖A‖‖X‖`` (what the solver checks);
    ``"rhs"`` divides by ``‖Q‖`` alone.
    """
    R = A.T @ X + X @ A + Q
    denom = float(np.linalg.norm(Q))
    if relative_to == "backward":
        denom += 2.0 * float(np.linalg.norm(A) * np.linalg.norm(X))
    return float(np.linalg.norm(R)) / denom if denom > 0 else 0.0


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve ``AᵀX + XA + Q = 0`` for symmetric ``X``.

    Args:
        A: Hurwitz matrix.
        Q: Symmetric right-hand side.

    Raises:
        NotHurwitz: If an eigenvalue of ``A`` has nonnegative real part.
        ConvergenceFailure: If the residual check fails.
    """
    A = as_matrix(A, "A", square=True)
    Q = _symmetric(as_matrix(Q, "Q", square=True), "Q")
    n = A.shape[0]
    if Q.shape != A.shape:
        raise DimensionMismatch(f"Q has shape {Q.shape}, A has {A.shape}")

    abscissa = float(np.max(eigenvalues(A).real))
    if abscissa >= 0.0:
        raise NotHurwitz(f"spectral abscissa {abscissa:.3e} is not negative")

    cfg = tolerances()
    if n <= cfg.kron_max_dim:
        eye = np.eye(n)
        M = np.kron(eye, A.T) + np.kron(A.T, eye)
        X = solve_linear(M, -Q.reshape(-1, order="F")).reshape(n, n, order="F")
    else:
        X = sla.solve_continuous_lyapunov(A.T, -Q)
    X = 0.5 * (X + X.T)

    residual = lyapunov_residual(A, X, Q)
    if residual > cfg.lyapunov_tol:
        raise ConvergenceFailure(
            f"Lyapunov residual {residual:.3e} exceeds {cfg.lyapunov_tol:.1e}"
        )
    return X


def solve_sylvester(A, B, Q) -> np.ndarray:
    """Solve ``AX + XB = Q`` through the Kronecker-product linear system.

    Raises:
        SingularMatrix: If ``spectrum(A)`` and ``spectrum(−B)`` intersect.
    """
    A = as_matrix(A, "A", square=True)
    B = as_matrix(B, "B", square=True)
    Q = as_matrix(Q, "Q")
    n, m = A.shape[0], B.shape[0]
    if Q.shape != (n, m):
        raise DimensionMismatch(f"Q has shape {Q.shape}, expected {(n, m)}")
    if n * m > _KRON_MAX_UNKNOWNS:
        return sla.solve_sylvester(A, B, Q)
    M = np.kron(np.eye(m), A) + np.kron(B.T, np.eye(n))
    return solve_linear(M, Q.reshape(-1, order="F")).reshape(n, m, order="F")


def _select_stable(margin: float):
    """Schur selector for eigenvalues left of ``-margin``.

    LAPACK's real driver hands the callback (re, im); the complex one a
    single complex value. f2py counts the declared parameters, so they are
    spelled out.
    """

    def select(x, y=None) -> bool:
        return bool(np.real(x) < -margin)

    return select


def prestabilizing_gain(A, B, margin: float | None = None) -> np.ndarray:
    """Gain ``F`` with ``A + B·F`` Hurwitz, touching only the slow modes.

    The eigenvalues of ``A`` with real part ≥ ``-margin`` are isolated by an
    ordered real Schur decomposition and moved to −1, −1.1, … by placement
    on the trailing block; the others are left where they are.

    Raises:
        NotStabilizable: If the slow modes cannot be moved.
    """
    A = as_matrix(A, "A", square=True)
    B = as_matrix(B, "B")
    n, m = B.shape
    if n != A.shape[0]:
        raise DimensionMismatch(f"B has {n} rows, A has {A.shape[0]}")
    margin = tolerances().stab_margin if margin is None else margin

    T, Z, sdim = sla.schur(A, output="real", sort=_select_stable(margin))
    k = n - sdim
    if k == 0:
        return np.zeros((m, n))

    T22 = T[sdim:, sdim:]
    B2 = Z[:, sdim:].T @ B
    targets = _PLACE_FIRST + _PLACE_STEP * np.arange(k)
    logger.debug("Pre-stabilizing %d slow mode(s) of a %d-dim system", k, n)

    if float(np.linalg.norm(B2)) <= 1e-12 * max(float(np.linalg.norm(B)), 1.0):
        raise NotStabilizable(f"{k} slow mode(s) are not reachable from the input")
    if k == 1:
        F2 = (targets[0] - T22[0, 0]) * B2.T / (B2 @ B2.T).item()
    else:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                F2 = -place_poles(T22, B2, targets).gain_matrix
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise NotStabilizable(f"pole placement on the slow modes failed: {exc}") from exc

    F = F2 @ Z[:, sdim:].T
    abscissa = float(np.max(eigenvalues(A + B @ F).real))
    if abscissa >= 0.0:
        raise NotStabilizable(f"pre-stabilized abscissa {abscissa:.3e} is not negative")
    return F


def care_residual(
    A: np.ndarray,
    B: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    X: np.ndarray,
    *,
    relative_to: Normalization = "backward",
) -> float:
    """Residual of ``AᵀX + XA − XBR⁻¹BᵀX + Q = 0``, normalized as in
    ``lyapunov_residual``."""
    XG = X @ B @ np.linalg.solve(R, B.T @ X)
    res = A.T @ X + X @ A - XG + Q
    denom = float(np.linalg.norm(Q))
    if relative_to == "backward":
        denom += 2.0 * float(np.linalg.norm(A) * np.linalg.norm(X)) + float(np.linalg.norm(XG))
    return float(np.linalg.norm(res)) / denom if denom > 0 else 0.0


def solve_care(A, B, Q, R) -> np.ndarray:
    """Stabilizing solution of ``AᵀX + XA − XBR⁻¹BᵀX + Q = 0``.

    Newton–Kleinman: with ``F_k`` stabilizing, solve
    ``(A+BF_k)ᵀX + X(A+BF_k) + Q + F_kᵀRF_k = 0`` and set
    ``F_{k+1} = −R⁻¹BᵀX``. Iteration stops when the relative change of
    ``X`` drops below ``newton_tol`` or stagnates once the residual is
    already within ``care_tol``.

    Raises:
        NotStabilizable: If no stabilizing initial gain exists.
        ConvergenceFailure: If the residual is not within ``care_tol`` after
            ``newton_max_iter`` steps.
    """
    A = as_matrix(A, "A", square=True)
    B = as_matrix(B, "B")
    Q = _symmetric(as_matrix(Q, "Q", square=True), "Q")
    R = _symmetric(as_matrix(R, "R", square=True), "R")
    n, m = B.shape
    if n != A.shape[0] or Q.shape != A.shape or R.shape != (m, m):
        raise DimensionMismatch(
            f"incompatible shapes A{A.shape} B{B.shape} Q{Q.shape} R{R.shape}"
        )
    try:
        R_chol = sla.cho_factor(R)
    except np.linalg.LinAlgError as exc:
        raise InvalidMatrix("R must be positive definite") from exc

    cfg = tolerances()
    F = prestabilizing_gain(A, B)
    X = np.zeros((n, n))
    change_prev = np.inf
    residual = np.inf
    for iteration in range(1, cfg.newton_max_iter + 1):
        Ak = A + B @ F
        try:
            X_new = solve_lyapunov(Ak, Q + F.T @ R @ F)
        except (NotHurwitz, SingularMatrix) as exc:
            raise ConvergenceFailure(f"Newton–Kleinman step {iteration} lost stability") from exc
        change = float(np.linalg.norm(X_new - X)) / max(float(np.linalg.norm(X_new)), 1.0)
        X = X_new
        F = -sla.cho_solve(R_chol, B.T @ X)
        residual = care_residual(A, B, Q, R, X)
        if change <= cfg.newton_tol or (residual <= cfg.care_tol and change >= change_prev):
            logger.debug(
                "Newton–Kleinman converged in %d steps (residual %.2e)", iteration, residual
            )
            break
        change_prev = change

    if residual > cfg.care_tol:
        raise ConvergenceFailure(
            f"CARE residual {residual:.3e} exceeds {cfg.care_tol:.1e} "
            f"after {cfg.newton_max_iter} Newton steps"
        )
    return 0.5 * (X + X.T)
