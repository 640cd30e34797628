"""Observer-based internal-model controller.

The controller state is ``(z₁, x̂)``::

    ż₁ = G1 z₁ + G2 e
    x̂̇ = A x̂ + B u + L(ŷ − e),   ŷ = C x̂ + D u
    u  = K1 z₁ + K2 x̂,            K2 = K0 + K1 H_K

``ControllerRealization`` keeps the structured parts (so the observer can
be read as a copy of the plant) and derives the flat generator ``𝒢₁``,
input map ``𝒢₂`` and output map ``K`` from them on demand.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from regforge.control.internal_model import InternalModel
from regforge.control.stabilization import hautus_controllable, is_hurwitz
from regforge.errors import DimensionMismatch, NotStabilizable
from regforge.model.statespace import StateSpaceModel
from regforge.numerics.linalg import as_matrix
from regforge.numerics.matrix_equations import solve_care

logger = logging.getLogger("regforge.control")


def design_K1(
    G1, B1, q_weight: float = 1.0, r_weight: float = 1.0, *, margin: float = 0.0
) -> np.ndarray:
    """LQR gain ``K1`` with ``G1 + B1·K1`` Hurwitz.

    Solves the Riccati equation for ``(G1 + margin·I, B1)``, which places the
    spectrum of ``G1 + B1·K1`` left of ``−margin``.

    Raises:
        NotStabilizable: If ``(G1, B1)`` fails the Hautus test (a transmission
            zero at a design frequency) or the Riccati solve fails.
    """
    G1 = as_matrix(G1, "G1", square=True)
    B1 = as_matrix(B1, "B1")
    if B1.shape[0] != G1.shape[0]:
        raise DimensionMismatch(f"B1 has {B1.shape[0]} rows, G1 has {G1.shape[0]}")
    if not hautus_controllable(G1, B1):
        raise NotStabilizable("(G1, B1) is not controllable")
    dim, m = B1.shape
    X = solve_care(G1 + margin * np.eye(dim), B1, q_weight * np.eye(dim), r_weight * np.eye(m))
    K1 = -(B1.T @ X) / r_weight
    ok, abscissa = is_hurwitz(G1 + B1 @ K1)
    if not ok:
        raise NotStabilizable(f"G1 + B1·K1 has abscissa {abscissa:.3e}")
    logger.debug("K1 designed: abscissa(G1 + B1·K1) = %.4g", abscissa)
    return K1


@dataclass(frozen=True, eq=False)
class ControllerRealization:
    internal_model: InternalModel
    L: np.ndarray
    K0: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    HK: np.ndarray
    B1: np.ndarray
    # Observer copy of the plant
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    im_abscissa: float
    plant_hash: str = ""
    hk_truncation: int | None = None
    tolerances: dict[str, float] = field(default_factory=dict)

    @property
    def G1(self) -> np.ndarray:
        return self.internal_model.G1

    @property
    def G2(self) -> np.ndarray:
        return self.internal_model.G2

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        """Controller state dimension ``dim(z₁) + n``."""
        return self.internal_model.dim + self.n

    @property
    def flat(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(𝒢₁, 𝒢₂, K)`` of the controller as one state-space system."""
        BL = self.B + self.L @ self.D
        dz = self.internal_model.dim
        G1_flat = np.block(
            [
                [self.G1, np.zeros((dz, self.n))],
                [BL @ self.K1, self.A + self.L @ self.C + BL @ self.K2],
            ]
        )
        G2_flat = np.vstack([self.G2, -self.L])
        K = np.hstack([self.K1, self.K2])
        return G1_flat, G2_flat, K

    def split(self, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dz = self.internal_model.dim
        return state[:dz], state[dz:]

    def output(self, z1: np.ndarray, xhat: np.ndarray) -> np.ndarray:
        """``u = K1 z₁ + K2 x̂``."""
        return self.K1 @ z1 + self.K2 @ xhat

    def derivative(self, z1: np.ndarray, xhat: np.ndarray, e: np.ndarray):
        """``(ż₁, x̂̇)`` in the structured form."""
        u = self.output(z1, xhat)
        y_hat = self.C @ xhat + self.D @ u
        return self.G1 @ z1 + self.G2 @ e, self.A @ xhat + self.B @ u + self.L @ (y_hat - e)


def assemble_controller(
    internal_model: InternalModel,
    L,
    K0,
    K1,
    HK,
    plant: StateSpaceModel,
    *,
    B1=None,
    plant_hash: str = "",
    hk_truncation: int | None = None,
    tolerances: dict[str, float] | None = None,
) -> ControllerRealization:
    """Assemble the controller with ``K2 = K0 + K1·H_K``.

    ``B1`` defaults to ``H_K·B + G2·D``; pass the one used to design ``K1``
    when ``H_K`` is truncated.

    Raises:
        DimensionMismatch: On inconsistent shapes.
    """
    n, m, p = plant.n, plant.m, plant.p
    dz = internal_model.dim
    L = np.asarray(L, dtype=float)
    K0 = np.asarray(K0, dtype=float)
    K1 = np.asarray(K1, dtype=float)
    HK = np.asarray(HK, dtype=float)
    expected = {"L": (n, p), "K0": (m, n), "K1": (m, dz), "HK": (dz, n)}
    for name, arr in (("L", L), ("K0", K0), ("K1", K1), ("HK", HK)):
        if arr.shape != expected[name]:
            raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {expected[name]}")
    if internal_model.p != p:
        raise DimensionMismatch(f"internal model has p={internal_model.p}, plant has p={p}")

    B1 = HK @ plant.B + internal_model.G2 @ plant.D if B1 is None else np.asarray(B1, float)
    if B1.shape != (dz, m):
        raise DimensionMismatch(f"B1 has shape {B1.shape}, expected {(dz, m)}")
    K2 = K0 + K1 @ HK
    _, abscissa = is_hurwitz(internal_model.G1 + B1 @ K1)
    return ControllerRealization(
        internal_model=internal_model,
        L=L,
        K0=K0,
        K1=K1,
        K2=K2,
        HK=HK,
        B1=B1,
        A=np.array(plant.A),
        B=np.array(plant.B),
        C=np.array(plant.C),
        D=np.array(plant.D),
        im_abscissa=abscissa,
        plant_hash=plant_hash,
        hk_truncation=hk_truncation,
        tolerances=dict(tolerances or {}),
    )


def assembly_residual(ctrl: ControllerRealization) -> float:
    """``‖K2 − K0 − K1·H_K‖ / max(‖K2‖, 1)``."""
    res = ctrl.K2 - ctrl.K0 - ctrl.K1 @ ctrl.HK
    return float(np.linalg.norm(res) / max(np.linalg.norm(ctrl.K2), 1.0))


def observer_identity_residual(ctrl: ControllerRealization) -> float:
    """Match the flat generator against the structured controller equations.

    Rebuilds the ``z₁`` rows as ``[G1, 0 | G2]`` and the ``x̂`` rows as the sum
    of the ``A x̂``, ``B u`` and ``L(ŷ − e)`` contributions, and returns the
    relative difference to ``[𝒢₁ | 𝒢₂]``.
    """
    G1f, G2f, _ = ctrl.flat
    dz, n = ctrl.internal_model.dim, ctrl.n
    p_out, p = ctrl.C.shape[0], ctrl.internal_model.p
    flat = np.hstack([G1f, G2f])

    u_map = np.hstack([ctrl.K1, ctrl.K2, np.zeros((ctrl.K1.shape[0], p))])
    state_term = np.hstack([np.zeros((n, dz)), ctrl.A, np.zeros((n, p))])
    input_term = ctrl.B @ u_map
    y_hat = np.hstack([np.zeros((p_out, dz)), ctrl.C, np.zeros((p_out, p))])
    y_hat = y_hat + ctrl.D @ u_map
    error = np.hstack([np.zeros((p_out, dz + n)), np.eye(p)])
    injection = ctrl.L @ (y_hat - error)
    z_rows = np.hstack([ctrl.G1, np.zeros((dz, n)), ctrl.G2])

    rebuilt = np.vstack([z_rows, state_term + input_term + injection])
    return float(np.linalg.norm(flat - rebuilt) / max(np.linalg.norm(flat), 1.0))
