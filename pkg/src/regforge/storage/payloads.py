"""JSON payloads for matrices and frequency data.

Matrices travel as ``{"rows", "cols", "data"}`` with ``data`` row-major;
complex matrices as a pair of real payloads. Pydantic serializes floats in
shortest round-trip form, so a matrix read back is bit-identical.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Payload(BaseModel):
    """Base for all file payloads. Refuse unknown keys."""

    model_config = ConfigDict(extra="forbid")


class MatrixPayload(_Payload):
    rows: int = Field(ge=0)
    cols: int = Field(ge=0)
    data: list[list[float]]

    @model_validator(mode="after")
    def _shape(self) -> MatrixPayload:
        if len(self.data) != self.rows or any(len(r) != self.cols for r in self.data):
            raise ValueError(f"data does not have shape ({self.rows}, {self.cols})")
        return self

    @classmethod
    def from_array(cls, arr) -> MatrixPayload:
        arr = np.atleast_2d(np.asarray(arr, dtype=float))
        return cls(rows=arr.shape[0], cols=arr.shape[1], data=arr.tolist())

    def to_array(self) -> np.ndarray:
        return np.array(self.data, dtype=float).reshape(self.rows, self.cols)


class ComplexMatrixPayload(_Payload):
    real: MatrixPayload
    imag: MatrixPayload

    @classmethod
    def from_array(cls, arr) -> ComplexMatrixPayload:
        arr = np.atleast_2d(np.asarray(arr, dtype=complex))
        return cls(real=MatrixPayload.from_array(arr.real), imag=MatrixPayload.from_array(arr.imag))

    def to_array(self) -> np.ndarray:
        return self.real.to_array() + 1j * self.imag.to_array()


class FrequencyPointPayload(_Payload):
    omega: float
    PK: ComplexMatrixPayload
    PKI: ComplexMatrixPayload
