"""Exogenous signal class: finite sums of sinusoids at known frequencies.

``y_ref(t) = Σ a_k cos(ω_k t + θ_k)`` and ``w_dist(t) = Σ b_k cos(ω_k t + φ_k)``.
Only the frequencies reach the controller design; amplitudes and phases are
used for simulation.
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from regforge.errors import InvalidConfig, InvalidFrequencies

_TWO_PI = 2.0 * math.pi


def validate_frequencies(frequencies) -> tuple[float, ...]:
    """Check frequencies are finite, nonnegative and strictly increasing.

    Raises:
        InvalidFrequencies: On an empty, negative, non-finite, duplicated or
            unordered frequency list.
    """
    freqs = tuple(float(w) for w in frequencies)
    if not freqs:
        raise InvalidFrequencies("at least one frequency is required")
    if any(not math.isfinite(w) or w < 0.0 for w in freqs):
        raise InvalidFrequencies(f"frequencies must be finite and nonnegative: {list(freqs)}")
    if any(b <= a for a, b in zip(freqs, freqs[1:])):
        raise InvalidFrequencies(f"frequencies must be strictly increasing: {list(freqs)}")
    return freqs


class ExoSignalSpec(BaseModel):
    """Frequencies, amplitudes and phases of the reference and disturbance.

    Amplitudes are given per frequency: ``ref_amplitudes[k]`` is the vector
    ``a_k`` (length p), ``dist_amplitudes[k]`` the vector ``b_k`` (length n_d).
    Missing phases default to zero; missing disturbance amplitudes mean no
    disturbance.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    frequencies: list[float] = Field(min_length=1)
    ref_amplitudes: list[list[float]]
    ref_phases: list[float] | None = None
    dist_amplitudes: list[list[float]] | None = None
    dist_phases: list[float] | None = None

    @model_validator(mode="after")
    def _shapes(self) -> ExoSignalSpec:
        validate_frequencies(self.frequencies)
        k = len(self.frequencies)
        for name in ("ref_amplitudes", "ref_phases", "dist_amplitudes", "dist_phases"):
            value = getattr(self, name)
            if value is not None and len(value) != k:
                raise ValueError(f"{name} needs one entry per frequency ({k})")
        for name, rows in (("ref_amplitudes", self.ref_amplitudes),
                           ("dist_amplitudes", self.dist_amplitudes)):
            if rows and len({len(r) for r in rows}) != 1:
                raise ValueError(f"{name} rows must all have the same length")
        for name in ("ref_phases", "dist_phases"):
            phases = getattr(self, name) or []
            if any(not 0.0 <= ph < _TWO_PI for ph in phases):
                raise ValueError(f"{name} must lie in [0, 2π)")
        return self

    # ── Shapes ──

    @property
    def omegas(self) -> np.ndarray:
        return np.asarray(self.frequencies, dtype=float)

    @property
    def p(self) -> int:
        return len(self.ref_amplitudes[0])

    @property
    def n_d(self) -> int:
        return len(self.dist_amplitudes[0]) if self.dist_amplitudes else 0

    def check_dimensions(self, p: int, n_d: int) -> None:
        """Raise ``InvalidConfig`` unless amplitudes match the plant."""
        if self.p != p:
            raise InvalidConfig(f"reference amplitudes have length {self.p}, plant has p={p}")
        if self.dist_amplitudes is not None and self.n_d != n_d:
            raise InvalidConfig(
                f"disturbance amplitudes have length {self.n_d}, plant has n_d={n_d}"
            )

    def _ref(self) -> tuple[np.ndarray, np.ndarray]:
        phases = self.ref_phases or [0.0] * len(self.frequencies)
        return np.asarray(self.ref_amplitudes, dtype=float), np.asarray(phases, dtype=float)

    def _dist(self, n_d: int) -> tuple[np.ndarray, np.ndarray]:
        k = len(self.frequencies)
        amps = (
            np.asarray(self.dist_amplitudes, dtype=float)
            if self.dist_amplitudes is not None
            else np.zeros((k, n_d))
        )
        phases = self.dist_phases or [0.0] * k
        return amps, np.asarray(phases, dtype=float)

    # ── Evaluation ──

    def _evaluate(self, amps: np.ndarray, phases: np.ndarray, t) -> np.ndarray:
        t_arr = np.asarray(t, dtype=float)
        waves = np.cos(np.multiply.outer(t_arr, self.omegas) + phases)
        return waves @ amps

    def eval_ref(self, t) -> np.ndarray:
        """Reference at ``t`` (shape ``(p,)``) or at each time in an array (``(len, p)``)."""
        return self._evaluate(*self._ref(), t)

    def eval_dist(self, t, n_d: int | None = None) -> np.ndarray:
        """Disturbance at ``t``; ``n_d`` sizes the zero signal when none is given."""
        return self._evaluate(*self._dist(self.n_d if n_d is None else n_d), t)

    def eval_exogenous(self, t, n_d: int | None = None) -> np.ndarray:
        """Stacked closed-loop input ``w_e = (w_dist, y_ref)``."""
        return np.concatenate([self.eval_dist(t, n_d), self.eval_ref(t)], axis=-1)

    def exosystem(self, n_d: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Linear generator ``(S, E, ζ₀)`` with ``w_e(t) = E·exp(St)·ζ₀``.

        One state for ω = 0 and a (cos, sin) pair for every other frequency,
        shared by all channels.
        """
        n_d = self.n_d if n_d is None else n_d
        d_amps, d_phases = self._dist(n_d)
        r_amps, r_phases = self._ref()
        blocks, cols, zeta0 = [], [], []
        for k, w in enumerate(self.frequencies):
            d_a, r_a = d_amps[k], r_amps[k]
            if w == 0.0:
                blocks.append(np.zeros((1, 1)))
                cols.append(np.concatenate([d_a * math.cos(d_phases[k]),
                                            r_a * math.cos(r_phases[k])])[:, None])
                zeta0.append([1.0])
                continue
            blocks.append(w * np.array([[0.0, -1.0], [1.0, 0.0]]))
            cos_col = np.concatenate([d_a * math.cos(d_phases[k]), r_a * math.cos(r_phases[k])])
            sin_col = -np.concatenate([d_a * math.sin(d_phases[k]), r_a * math.sin(r_phases[k])])
            cols.append(np.column_stack([cos_col, sin_col]))
            zeta0.append([1.0, 0.0])
        dim = sum(b.shape[0] for b in blocks)
        S = np.zeros((dim, dim))
        offset = 0
        for block in blocks:
            size = block.shape[0]
            S[offset : offset + size, offset : offset + size] = block
            offset += size
        return S, np.hstack(cols), np.concatenate(zeta0)
