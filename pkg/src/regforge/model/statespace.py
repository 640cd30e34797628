"""Finite-dimensional state-space carrier and transfer-function evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from regforge.errors import DimensionMismatch, InvalidMatrix, ResolventPole, SingularMatrix
from regforge.numerics.linalg import solve_linear


def _frozen(arr, name: str, shape: tuple[int | None, int | None]) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    if out.ndim != 2:
        raise InvalidMatrix(f"{name} must be 2-D, got shape {out.shape}")
    for axis, expected in enumerate(shape):
        if expected is not None and out.shape[axis] != expected:
            raise DimensionMismatch(f"{name} has shape {out.shape}, expected {shape}")
    if not np.all(np.isfinite(out)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Real system ``ẋ = Ax + Bu + B_d w``, ``y = Cx + Du + D_d w``.

    ``weights`` are the quadrature weights of the discrete inner product
    ``⟨x, z⟩ = Σ wᵢ xᵢ zᵢ``; adjoints are taken in that product. Arrays are
    copied and made read-only on construction.
    """

    A: np.ndarray
    B: np.ndarray
    B_d: np.ndarray
    C: np.ndarray
    D: np.ndarray
    D_d: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        A = _frozen(self.A, "A", (None, None))
        n = A.shape[0]
        if A.shape != (n, n) or n == 0:
            raise InvalidMatrix(f"A must be square and non-empty, got {A.shape}")
        B = _frozen(self.B, "B", (n, None))
        C = _frozen(self.C, "C", (None, n))
        m, p = B.shape[1], C.shape[0]
        if m == 0 or p == 0:
            raise DimensionMismatch("input and output dimensions must be positive")
        if p > m:
            raise DimensionMismatch(f"output dimension {p} exceeds input dimension {m}")
        B_d = _frozen(np.reshape(self.B_d, (n, -1)), "B_d", (n, None))
        n_d = B_d.shape[1]
        D = _frozen(self.D, "D", (p, m))
        D_d = _frozen(np.reshape(self.D_d, (p, n_d)), "D_d", (p, n_d))
        weights = np.array(self.weights, dtype=float).ravel()
        if weights.shape != (n,) or np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise InvalidMatrix("weights must be n positive finite reals")
        weights.setflags(write=False)
        for name, value in (
            ("A", A), ("B", B), ("B_d", B_d), ("C", C), ("D", D), ("D_d", D_d), ("weights", weights)
        ):
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def n_d(self) -> int:
        return self.B_d.shape[1]

    @property
    def weight_matrix(self) -> np.ndarray:
        return np.diag(self.weights)

    def dual(self) -> StateSpaceModel:
        """Weighted-adjoint system ``(W⁻¹AᵀW, W⁻¹Cᵀ, BᵀW, Dᵀ)``.

        Only defined for square systems (m = p). Disturbance channels are
        dropped.
        """
        w = self.weights
        return StateSpaceModel(
            A=(self.A.T * w) / w[:, None],
            B=self.C.T / w[:, None],
            B_d=np.zeros((self.n, 0)),
            C=self.B.T * w,
            D=self.D.T,
            D_d=np.zeros((self.m, 0)),
            weights=w,
        )


def transfer_value(sys: StateSpaceModel, lam: complex) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate ``P(λ) = C(λ−A)⁻¹B + D`` and ``C(λ−A)⁻¹`` at one point.

    One factorization of the transposed resolvent with the ``p`` columns of
    ``Cᵀ`` on the right gives both blocks.

    Returns:
        ``(P, P_psi)`` with shapes ``p×m`` and ``p×n`` (complex).

    Raises:
        ResolventPole: If ``λ`` is numerically in the spectrum of ``A``.
    """
    M = lam * np.eye(sys.n) - sys.A
    try:
        Z = solve_linear(M.T, sys.C.T.astype(complex))
    except SingularMatrix as exc:
        raise ResolventPole(f"λ = {lam} is a pole of the plant resolvent") from exc
    P_psi = Z.T
    return P_psi @ sys.B + sys.D, P_psi
