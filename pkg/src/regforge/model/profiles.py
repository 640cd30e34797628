"""Spatial profiles: JSON-describable functions of ξ on the plant domain.

Profiles describe conductivity, reaction, distributed disturbance shapes and
initial states. Each variant is discriminated by a ``kind`` field and
evaluates vectorized on a grid via ``sample``. A bare number anywhere a
profile is expected is read as a constant profile.
"""

from __future__ import annotations

from typing import Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator


class _Profile(BaseModel):
    """Base for all profiles. Refuse unknown keys."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    def sample(self, xi: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError


class ConstantProfile(_Profile):
    kind: Literal["constant"] = "constant"
    value: float

    def sample(self, xi: np.ndarray) -> np.ndarray:
        return np.full(np.shape(xi), self.value, dtype=float)


class PolynomialProfile(_Profile):
    """``Σ coefficients[k]·ξᵏ`` (ascending powers)."""

    kind: Literal["polynomial"] = "polynomial"
    coefficients: list[float] = Field(min_length=1)

    def sample(self, xi: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(xi, dtype=float), self.coefficients)


class CosineProfile(_Profile):
    """``offset + amplitude·cos(wavenumber·ξ + phase)``."""

    kind: Literal["cosine"] = "cosine"
    offset: float = 0.0
    amplitude: float = 1.0
    wavenumber: float = 0.0
    phase: float = 0.0

    def sample(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return self.offset + self.amplitude * np.cos(self.wavenumber * xi + self.phase)


class IndicatorProfile(_Profile):
    """``value`` on the closed interval [start, stop], zero elsewhere."""

    kind: Literal["indicator"] = "indicator"
    start: float
    stop: float
    value: float = 1.0

    @model_validator(mode="after")
    def _ordered(self) -> IndicatorProfile:
        if self.stop < self.start:
            raise ValueError(f"indicator interval [{self.start}, {self.stop}] is empty")
        return self

    def sample(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.where((xi >= self.start) & (xi <= self.stop), self.value, 0.0)


class TabulatedProfile(_Profile):
    """Piecewise-linear interpolation through (nodes, values)."""

    kind: Literal["tabulated"] = "tabulated"
    nodes: list[float] = Field(min_length=2)
    values: list[float] = Field(min_length=2)

    @model_validator(mode="after")
    def _consistent(self) -> TabulatedProfile:
        if len(self.nodes) != len(self.values):
            raise ValueError("nodes and values must have equal length")
        if any(b <= a for a, b in zip(self.nodes, self.nodes[1:])):
            raise ValueError("nodes must be strictly increasing")
        return self

    def sample(self, xi: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(xi, dtype=float), self.nodes, self.values)


def _number_as_constant(value: Any) -> Any:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return {"kind": "constant", "value": float(value)}
    return value


_TaggedProfile = Annotated[
    ConstantProfile | PolynomialProfile | CosineProfile | IndicatorProfile | TabulatedProfile,
    Field(discriminator="kind"),
]

Profile = Annotated[_TaggedProfile, BeforeValidator(_number_as_constant)]
