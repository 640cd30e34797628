"""Controller JSON files.

A file holds the structured realization (internal model, observer copy of
the plant, gains), the flat ``(𝒢₁, 𝒢₂, K)`` used for simulation, the
frequency data the design was built from, the certificates and the plant
hash. On load the flat matrices are recomputed from the structured ones and
must match the stored ones exactly.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from regforge import __version__
from regforge.control.controller import ControllerRealization
from regforge.control.freqdata import FrequencyPoint
from regforge.control.internal_model import build_internal_model
from regforge.control.stabilization import k0_kernel
from regforge.errors import ControllerFileError, HashMismatch, RegforgeError
from regforge.storage.payloads import ComplexMatrixPayload, FrequencyPointPayload, MatrixPayload
from regforge.utils.hashing import atomic_write_text

logger = logging.getLogger("regforge.storage")

#: Bumped whenever the file layout changes incompatibly.
SCHEMA_VERSION = 1


class StructuredRealization(BaseModel):
    model_config = ConfigDict(extra="forbid")

    G1: MatrixPayload
    G2: MatrixPayload
    L: MatrixPayload
    K0: MatrixPayload
    K1: MatrixPayload
    K2: MatrixPayload
    HK: MatrixPayload
    B1: MatrixPayload
    A: MatrixPayload
    B: MatrixPayload
    C: MatrixPayload
    D: MatrixPayload


class FlatRealization(BaseModel):
    model_config = ConfigDict(extra="forbid")

    G1: MatrixPayload
    G2: MatrixPayload
    K: MatrixPayload


class ControllerFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: int = SCHEMA_VERSION
    regforge_version: str = __version__
    plant_hash: str
    frequencies: list[float]
    p: int
    blocks: list[str]
    hk_truncation: int | None = None
    im_abscissa: float
    tolerances: dict[str, float] = Field(default_factory=dict)
    certificates: dict[str, float] = Field(default_factory=dict)
    weights: list[float]
    k0_kernel: MatrixPayload
    structured: StructuredRealization
    flat: FlatRealization
    freq_data: list[FrequencyPointPayload] = Field(default_factory=list)


def controller_to_file(
    ctrl: ControllerRealization,
    weights,
    *,
    points=(),
    certificates: dict[str, float] | None = None,
) -> ControllerFile:
    """Build the file model for ``ctrl``.

    Args:
        weights: Quadrature weights of the plant grid (for the ``k₀`` kernel).
        points: Frequency points the design used.
        certificates: Named design certificates (margins, abscissas, residuals).
    """
    G1f, G2f, K = ctrl.flat
    m = MatrixPayload.from_array
    return ControllerFile(
        plant_hash=ctrl.plant_hash,
        frequencies=list(ctrl.internal_model.frequencies),
        p=ctrl.internal_model.p,
        blocks=list(ctrl.internal_model.blocks),
        hk_truncation=ctrl.hk_truncation,
        im_abscissa=ctrl.im_abscissa,
        tolerances=dict(ctrl.tolerances),
        certificates=dict(certificates or {}),
        weights=[float(w) for w in weights],
        k0_kernel=m(k0_kernel(ctrl.K0, np.asarray(weights))),
        structured=StructuredRealization(
            G1=m(ctrl.G1),
            G2=m(ctrl.G2),
            L=m(ctrl.L),
            K0=m(ctrl.K0),
            K1=m(ctrl.K1),
            K2=m(ctrl.K2),
            HK=m(ctrl.HK),
            B1=m(ctrl.B1),
            A=m(ctrl.A),
            B=m(ctrl.B),
            C=m(ctrl.C),
            D=m(ctrl.D),
        ),
        flat=FlatRealization(G1=m(G1f), G2=m(G2f), K=m(K)),
        freq_data=[
            FrequencyPointPayload(
                omega=pt.omega,
                PK=ComplexMatrixPayload.from_array(pt.PK),
                PKI=ComplexMatrixPayload.from_array(pt.PKI),
            )
            for pt in points
        ],
    )


def save_controller(path: Path, ctrl: ControllerRealization, weights, **kwargs) -> Path:
    """Write ``ctrl`` as indented JSON (atomic replace)."""
    file = controller_to_file(ctrl, weights, **kwargs)
    return atomic_write_text(Path(path), file.model_dump_json(indent=2) + "\n")


def realization_from_file(file: ControllerFile) -> ControllerRealization:
    """Rebuild the realization and check it against the stored flat matrices.

    Raises:
        ControllerFileError: If the internal model does not match the
            frequencies or the flat matrices differ from the recomputed ones.
    """
    s = file.structured
    try:
        im = build_internal_model(file.frequencies, file.p)
    except RegforgeError as exc:
        raise ControllerFileError(f"invalid internal model: {exc.message}") from exc
    if not (np.array_equal(im.G1, s.G1.to_array()) and np.array_equal(im.G2, s.G2.to_array())):
        raise ControllerFileError("stored G1/G2 do not match the frequencies")

    try:
        ctrl = ControllerRealization(
            internal_model=im,
            L=s.L.to_array(),
            K0=s.K0.to_array(),
            K1=s.K1.to_array(),
            K2=s.K2.to_array(),
            HK=s.HK.to_array(),
            B1=s.B1.to_array(),
            A=s.A.to_array(),
            B=s.B.to_array(),
            C=s.C.to_array(),
            D=s.D.to_array(),
            im_abscissa=file.im_abscissa,
            plant_hash=file.plant_hash,
            hk_truncation=file.hk_truncation,
            tolerances=dict(file.tolerances),
        )
        G1f, G2f, K = ctrl.flat
    except (ValueError, RegforgeError) as exc:
        raise ControllerFileError(f"inconsistent matrix shapes: {exc}") from exc

    stored = (file.flat.G1.to_array(), file.flat.G2.to_array(), file.flat.K.to_array())
    for name, recomputed, value in zip(("G1", "G2", "K"), (G1f, G2f, K), stored):
        if recomputed.shape != value.shape or not np.array_equal(recomputed, value):
            raise ControllerFileError(f"flat {name} does not match the structured realization")
    return ctrl


def frequency_points(file: ControllerFile) -> tuple[FrequencyPoint, ...]:
    return tuple(
        FrequencyPoint(omega=fp.omega, PK=fp.PK.to_array(), PKI=fp.PKI.to_array())
        for fp in file.freq_data
    )


def load_controller(path: Path) -> tuple[ControllerRealization, ControllerFile]:
    """Read, validate and rebuild a controller file.

    Raises:
        ControllerFileError: If the file is missing, malformed, of another
            schema version or internally inconsistent.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ControllerFileError(f"cannot read {path}: {exc}") from exc
    version = raw.get("schema_version") if isinstance(raw, dict) else None
    if version != SCHEMA_VERSION:
        raise ControllerFileError(
            f"{path} has schema version {version!r}, expected {SCHEMA_VERSION}"
        )
    try:
        file = ControllerFile.model_validate(raw)
    except ValidationError as exc:
        raise ControllerFileError(f"invalid controller file {path}: {exc}") from exc
    ctrl = realization_from_file(file)
    logger.debug("Loaded controller %s (plant %s)", path, file.plant_hash[:12])
    return ctrl, file


def check_plant_hash(ctrl: ControllerRealization, expected: str, *, force: bool = False) -> None:
    """Refuse a controller designed for another plant unless ``force`` is set.

    Raises:
        HashMismatch: On a digest mismatch without ``force``.
    """
    if ctrl.plant_hash == expected:
        return
    message = (
        f"controller was designed for plant {ctrl.plant_hash[:12]}, "
        f"config describes {expected[:12]}"
    )
    if not force:
        raise HashMismatch(message)
    logger.warning("%s (continuing with --force)", message)
