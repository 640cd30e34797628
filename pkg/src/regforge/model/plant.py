"""1D boundary-controlled reaction–diffusion plant and its discretization.

The plant is ``∂x/∂t = ∂ξ(c(ξ)∂ξx) + r(ξ)x + Σ profileⱼ(ξ)w_dist,j`` on
``(a, b)`` with Neumann flux input ``∂x/∂n = b_in·u`` at the two end points
and boundary point output ``y = c_a x(a) + c_b x(b)``.

Discretization uses a uniform grid that includes both boundary nodes,
conductivity sampled at half nodes, and half control volumes at the ends
(equivalent to ghost-node elimination of the flux condition). With trapezoid
weights ``W`` this keeps ``W·A`` symmetric when ``r ≡ 0``.
"""

from __future__ import annotations

import logging
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.optimize import brentq

from regforge.errors import ConvergenceFailure, InvalidConfig
from regforge.model.profiles import ConstantProfile, Profile
from regforge.model.statespace import StateSpaceModel, transfer_value
from regforge.utils.hashing import canonical_digest

logger = logging.getLogger("regforge.model")


class PlantConfig(BaseModel):
    """Continuous description of the plant, as read from the run file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    domain: tuple[float, float] = (0.0, 1.0)
    conductivity: Profile = ConstantProfile(value=1.0)
    # Multiplies the conductivity; robustness sweeps perturb this
    conductivity_scale: float = Field(1.0, gt=0.0)
    reaction: Profile = ConstantProfile(value=0.0)
    input_weight: tuple[float, float]
    output_weight: tuple[float, float]
    distributed_disturbances: list[Profile] = Field(default_factory=list)
    boundary_disturbances: list[tuple[float, float]] = Field(default_factory=list)
    n_grid: int = Field(50, ge=10)
    min_conductivity: float = Field(1e-8, gt=0.0)

    @model_validator(mode="after")
    def _invariants(self) -> PlantConfig:
        a, b = self.domain
        if not a < b:
            raise ValueError(f"domain ({a}, {b}) must satisfy a < b")
        if not any(self.input_weight):
            raise ValueError("input_weight must not be the zero pair")
        if not any(self.output_weight):
            raise ValueError("output_weight must not be the zero pair")
        return self

    @property
    def n_dist(self) -> int:
        return len(self.distributed_disturbances) + len(self.boundary_disturbances)

    def grid(self) -> np.ndarray:
        a, b = self.domain
        return np.linspace(a, b, self.n_grid)

    def with_conductivity_scale(self, factor: float) -> PlantConfig:
        """Copy with the conductivity multiplied by ``factor``."""
        return self.model_copy(update={"conductivity_scale": self.conductivity_scale * factor})

    def with_grid(self, n_grid: int) -> PlantConfig:
        return self.model_copy(update={"n_grid": n_grid})


def parse_plant_config(data: dict[str, Any]) -> PlantConfig:
    """Validate a plant section, mapping schema failures to ``InvalidConfig``."""
    try:
        return PlantConfig.model_validate(data)
    except ValidationError as exc:
        raise InvalidConfig(f"invalid plant: {exc}") from exc


def plant_hash(cfg: PlantConfig) -> str:
    """Stable digest of the canonicalized plant description."""
    return canonical_digest(cfg.model_dump(mode="json"))


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = h / 2.0
    return w


def _boundary_column(pair: tuple[float, float], c_ends: tuple[float, float], n: int, h: float):
    col = np.zeros(n)
    col[0] = 2.0 * c_ends[0] / h * pair[0]
    col[-1] = 2.0 * c_ends[1] / h * pair[1]
    return col


def discretize(cfg: PlantConfig) -> StateSpaceModel:
    """Finite-difference state-space model of the plant.

    Raises:
        InvalidConfig: If the conductivity drops below ``min_conductivity``.
    """
    n = cfg.n_grid
    a, b = cfg.domain
    h = (b - a) / (n - 1)
    xi = cfg.grid()
    half = xi[:-1] + h / 2.0

    c_half = cfg.conductivity_scale * cfg.conductivity.sample(half)
    c_nodes = cfg.conductivity_scale * cfg.conductivity.sample(xi)
    c_min = float(min(c_half.min(), c_nodes.min()))
    if not np.isfinite(c_min) or c_min < cfg.min_conductivity:
        raise InvalidConfig(f"conductivity minimum {c_min:.3e} below {cfg.min_conductivity:.1e}")
    r = cfg.reaction.sample(xi)

    A = np.zeros((n, n))
    flux = c_half / h**2
    idx = np.arange(n - 1)
    A[idx, idx + 1] += flux
    A[idx + 1, idx] += flux
    A[idx, idx] -= flux
    A[idx + 1, idx + 1] -= flux
    # Half control volumes at both ends
    A[0, :] *= 2.0
    A[-1, :] *= 2.0
    A += np.diag(r)

    c_ends = (float(c_nodes[0]), float(c_nodes[-1]))
    B = _boundary_column(cfg.input_weight, c_ends, n, h)[:, None]

    C = np.zeros((1, n))
    C[0, 0], C[0, -1] = cfg.output_weight

    columns = [profile.sample(xi) for profile in cfg.distributed_disturbances]
    columns += [_boundary_column(pair, c_ends, n, h) for pair in cfg.boundary_disturbances]
    B_d = np.column_stack(columns) if columns else np.zeros((n, 0))

    logger.debug("Discretized plant: n=%d, h=%.4g, n_d=%d", n, h, B_d.shape[1])
    return StateSpaceModel(
        A=A,
        B=B,
        B_d=B_d,
        C=C,
        D=np.zeros((1, 1)),
        D_d=np.zeros((1, B_d.shape[1])),
        weights=trapezoid_weights(n, h),
    )


def neumann_eigenbasis(cfg: PlantConfig, N: int) -> np.ndarray:
    """First ``N`` Neumann cosines, orthonormal in the weighted inner product.

    Columns are ``1, √2·cos(kπ(ξ−a)/(b−a))`` sampled on the grid and
    re-orthonormalized by a QR factorization of ``W^{1/2}V``.

    Returns:
        ``n_grid × N`` array; the column signs match the sampled cosines.
    """
    if not 0 <= N <= cfg.n_grid:
        raise InvalidConfig(f"basis size {N} must lie in [0, {cfg.n_grid}]")
    n = cfg.n_grid
    if N == 0:
        return np.zeros((n, 0))
    a, b = cfg.domain
    xi = cfg.grid()
    k = np.arange(N)
    V = np.cos(np.pi * np.outer(xi - a, k) / (b - a))
    V[:, 1:] *= np.sqrt(2.0)
    sqrt_w = np.sqrt(trapezoid_weights(n, (b - a) / (n - 1)))
    Q, R = np.linalg.qr(sqrt_w[:, None] * V)
    Q = Q * np.sign(np.diag(R))
    return Q / sqrt_w[:, None]


def observed_grid_order(cfg: PlantConfig, omega: float, grids: list[int]) -> float:
    """Observed convergence order of ``P(iω)`` over three grid refinements.

    Solves ``(h₁ᵖ − h₂ᵖ)/(h₂ᵖ − h₃ᵖ) = |P₁ − P₂|/|P₂ − P₃|`` for ``p``, which
    accounts for refinement ratios that are not exactly constant.
    """
    if len(grids) != 3:
        raise InvalidConfig("grid order estimate needs exactly three grids")
    a, b = cfg.domain
    hs = [(b - a) / (g - 1) for g in grids]
    values = [transfer_value(discretize(cfg.with_grid(g)), 1j * omega)[0] for g in grids]
    ratio = float(np.linalg.norm(values[0] - values[1]) / np.linalg.norm(values[1] - values[2]))

    def mismatch(p: float) -> float:
        return (hs[0] ** p - hs[1] ** p) / (hs[1] ** p - hs[2] ** p) - ratio

    try:
        return float(brentq(mismatch, 0.05, 10.0))
    except ValueError as exc:
        raise ConvergenceFailure(f"no convergence order fits error ratio {ratio:.3g}") from exc
