"""Dense matrix kernels: validated linear solves, eigenvalues, matrix exponential.

Every routine reads its tolerances from the active tolerance context
(``regforge.core.context``) and reports failures through the regforge
error hierarchy instead of NumPy/SciPy exceptions.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from regforge.core.context import tolerances
from regforge.errors import (
    ConvergenceFailure,
    DimensionMismatch,
    ExponentialOverflow,
    InvalidMatrix,
    SingularMatrix,
)

logger = logging.getLogger("regforge.numerics")


def as_matrix(M, name: str = "matrix", *, square: bool = False) -> np.ndarray:
    """Return ``M`` as a finite 2-D array with positive dimensions."""
    arr = np.asarray(M)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidMatrix(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise InvalidMatrix(f"{name} must be square, got shape {arr.shape}")
    if not np.iscomplexobj(arr):
        arr = arr.astype(float, copy=False)
    return arr


@dataclass(frozen=True)
class Factorization:
    """LU factors of a square matrix, reusable across right-hand sides."""

    lu: np.ndarray
    piv: np.ndarray
    norm: float

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return sla.lu_solve((self.lu, self.piv), rhs, check_finite=False)


def factorize(M) -> Factorization:
    """LU-factorize ``M`` and reject it when a pivot is below ``pivot_tol·‖M‖∞``.

    Raises:
        SingularMatrix: On a small pivot, which signals an evaluation point
            in or near the spectrum.
    """
    M = as_matrix(M, "M", square=True)
    norm = float(np.linalg.norm(M, np.inf))
    if norm == 0.0:
        raise SingularMatrix("matrix is zero")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=False)
    pivot = float(np.min(np.abs(np.diag(lu))))
    threshold = tolerances().pivot_tol * norm
    if pivot < threshold:
        raise SingularMatrix(f"pivot {pivot:.3e} below {threshold:.3e}")
    return Factorization(lu=lu, piv=piv, norm=norm)


def solve_linear(M, rhs) -> np.ndarray:
    """Solve ``M·X = rhs`` with a relative residual check.

    A residual above ``tol_solve·‖rhs‖`` triggers one step of iterative
    refinement; if that does not bring it under the tolerance the result is
    returned with a warning (the factorization itself was accepted).
    """
    M = as_matrix(M, "M", square=True)
    rhs_arr = np.asarray(rhs)
    vector = rhs_arr.ndim == 1
    rhs_arr = as_matrix(rhs_arr, "rhs")
    if rhs_arr.shape[0] != M.shape[0]:
        raise DimensionMismatch(f"rhs has {rhs_arr.shape[0]} rows, matrix has {M.shape[0]}")

    fac = factorize(M)
    X = fac.solve(rhs_arr)
    rhs_norm = float(np.linalg.norm(rhs_arr))
    limit = tolerances().tol_solve * rhs_norm
    residual = float(np.linalg.norm(M @ X - rhs_arr))
    if residual > limit:
        X = X - fac.solve(M @ X - rhs_arr)
        residual = float(np.linalg.norm(M @ X - rhs_arr))
        if residual > limit:
            logger.warning(
                "Linear solve residual %.3e exceeds %.3e (ill-conditioned system)", residual, limit
            )
    return X.ravel() if vector else X


def eigenvalues(M) -> np.ndarray:
    """All eigenvalues of ``M`` with multiplicity, backward-error checked.

    Raises:
        ConvergenceFailure: If LAPACK does not converge or an eigenpair
            residual exceeds ``eig_residual_tol·‖M‖``.
    """
    M = as_matrix(M, "M", square=True)
    try:
        vals, vecs = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigenvalue iteration failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise ConvergenceFailure("eigenvalues are not finite")

    scale = max(float(np.linalg.norm(M, 2)), 1.0)
    norms = np.linalg.norm(vecs, axis=0)
    residuals = np.linalg.norm(M @ vecs - vecs * vals, axis=0) / np.where(norms > 0, norms, 1.0)
    worst = float(np.max(residuals)) if residuals.size else 0.0
    if worst > tolerances().eig_residual_tol * scale:
        raise ConvergenceFailure(f"eigenpair residual {worst:.3e} too large")
    return vals


def spectral_abscissa(M) -> float:
    """Maximum real part of the spectrum of ``M``."""
    return float(np.max(eigenvalues(M).real))


def matrix_exponential(M, t: float = 1.0) -> np.ndarray:
    """``exp(M·t)`` by scaling-and-squaring with a Padé core.

    Raises:
        ExponentialOverflow: If ``‖M·t‖₁`` exceeds ``expm_norm_cap`` or the
            result is not finite.
    """
    M = as_matrix(M, "M", square=True)
    if not np.isfinite(t):
        raise InvalidMatrix("t must be finite")
    Mt = M * t
    norm = float(np.linalg.norm(Mt, 1))
    cap = tolerances().expm_norm_cap
    if norm > cap:
        raise ExponentialOverflow(f"‖M·t‖₁ = {norm:.3e} exceeds cap {cap:.3e}")
    E = sla.expm(Mt)
    if not np.all(np.isfinite(E)):
        raise ExponentialOverflow("matrix exponential overflowed")
    return E
