"""Internal-model pair ``(G1, G2)`` with p copies of the exosystem dynamics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from regforge.errors import InvalidConfig
from regforge.signals.exo import validate_frequencies


@dataclass(frozen=True, eq=False)
class InternalModel:
    """``G1 = diag(0_p, ω₁Ω_p, …, ω_qΩ_p)`` and ``G2 = [I_p, I_p, 0_p, …, I_p, 0_p]ᵀ``.

    ``blocks`` records the row layout for serialization, e.g.
    ``("0", "1:cos", "1:sin", ...)``. When the frequency list does not start
    at zero the zero block is omitted.
    """

    G1: np.ndarray
    G2: np.ndarray
    frequencies: tuple[float, ...]
    p: int
    blocks: tuple[str, ...]

    @property
    def dim(self) -> int:
        return self.G1.shape[0]

    @property
    def has_zero_block(self) -> bool:
        return self.frequencies[0] == 0.0


def omega_block(p: int) -> np.ndarray:
    """``Ω_p = [[0, I_p], [−I_p, 0]]``."""
    eye, zero = np.eye(p), np.zeros((p, p))
    return np.block([[zero, eye], [-eye, zero]])


def internal_model_dim(frequencies, p: int) -> int:
    freqs = validate_frequencies(frequencies)
    q = len(freqs)
    return p * (2 * q - 1) if freqs[0] == 0.0 else 2 * q * p


def build_internal_model(frequencies, p: int) -> InternalModel:
    """Build ``(G1, G2)`` for the given frequencies and output dimension.

    Raises:
        InvalidFrequencies: If the frequencies are not strictly increasing
            from a nonnegative start.
    """
    freqs = validate_frequencies(frequencies)
    if p < 1:
        raise InvalidConfig(f"output dimension must be positive, got {p}")
    dim = internal_model_dim(freqs, p)
    G1 = np.zeros((dim, dim))
    G2 = np.zeros((dim, p))
    eye = np.eye(p)
    omega = omega_block(p)
    labels: list[str] = []

    row = 0
    for k, w in enumerate(freqs):
        if w == 0.0:
            G2[row : row + p] = eye
            labels.append(f"{k}")
            row += p
            continue
        G1[row : row + 2 * p, row : row + 2 * p] = w * omega
        G2[row : row + p] = eye
        labels.extend((f"{k}:cos", f"{k}:sin"))
        row += 2 * p

    for arr in (G1, G2):
        arr.setflags(write=False)
    return InternalModel(G1=G1, G2=G2, frequencies=freqs, p=p, blocks=tuple(labels))
