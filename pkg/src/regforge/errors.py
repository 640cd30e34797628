"""Error hierarchy, stable error codes and process exit codes.

Three registries:

- ``ExitCode``: the documented process exit codes of the ``regforge`` CLI.
- ``Err``: stable string codes attached to every ``RegforgeError`` and to
  failure entries in the verification report. Naming: ``<area>.<reason>``
  lower_snake. Add new codes freely; never rename or remove one, since report
  consumers branch on them.
- The exception classes themselves. Each carries its ``code``, the exit code
  the CLI maps it to, and optionally the pipeline ``stage`` it surfaced in.
"""

from __future__ import annotations

from typing import Final


class ExitCode:
    """Process exit codes of the ``regforge`` CLI."""

    OK: Final = 0
    #: Schema, frequency set, plant hash or controller file rejected.
    CONFIG: Final = 1
    #: Any numerical or design-stage failure.
    DESIGN: Final = 2
    #: ``verify`` ran but at least one check failed.
    VERIFICATION: Final = 3


class Err:
    """Stable string codes for errors and failed report checks."""

    # ── Configuration ──
    CONFIG_INVALID: Final = "config.invalid"
    CONFIG_FREQUENCIES: Final = "config.invalid_frequencies"
    CONFIG_HASH_MISMATCH: Final = "config.hash_mismatch"
    CONFIG_CONTROLLER_FILE: Final = "config.controller_file"

    # ── Numerics ──
    NUMERICS_INVALID_MATRIX: Final = "numerics.invalid_matrix"
    NUMERICS_DIMENSION: Final = "numerics.dimension_mismatch"
    NUMERICS_SINGULAR: Final = "numerics.singular_matrix"
    NUMERICS_RESOLVENT_POLE: Final = "numerics.resolvent_pole"
    NUMERICS_CONVERGENCE: Final = "numerics.convergence_failure"
    NUMERICS_NOT_HURWITZ: Final = "numerics.not_hurwitz"
    NUMERICS_NOT_STABILIZABLE: Final = "numerics.not_stabilizable"
    NUMERICS_NOT_DETECTABLE: Final = "numerics.not_detectable"
    NUMERICS_OVERFLOW: Final = "numerics.exponential_overflow"
    NUMERICS_STEP_REJECTED: Final = "numerics.step_rejected"

    # ── Design ──
    DESIGN_TRANSMISSION_ZERO: Final = "design.transmission_zero"
    DESIGN_NON_REAL_RESIDUE: Final = "design.non_real_residue"

    # ── Verification ──
    VERIFY_CHECK_FAILED: Final = "verify.check_failed"
    VERIFY_SKIPPED: Final = "verify.skipped"


class RegforgeError(Exception):
    """Base class for every error raised by regforge."""

    code: str = "regforge.error"
    exit_code: int = ExitCode.DESIGN

    def __init__(self, message: str = "", *, stage: str | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.stage = stage

    def with_stage(self, stage: str) -> RegforgeError:
        """Attach the pipeline stage unless an inner stage was already recorded."""
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self) -> str:
        if self.stage:
            return f"{self.stage}: {self.message}"
        return self.message


# ── Configuration errors (exit 1) ──


class ConfigError(RegforgeError):
    code = Err.CONFIG_INVALID
    exit_code = ExitCode.CONFIG


class InvalidConfig(ConfigError):
    """Run file or plant description violates its schema or invariants."""


class InvalidFrequencies(ConfigError):
    """Frequencies are not nonnegative and strictly increasing."""

    code = Err.CONFIG_FREQUENCIES


class HashMismatch(ConfigError):
    """Controller file was designed for a different plant."""

    code = Err.CONFIG_HASH_MISMATCH


class ControllerFileError(ConfigError):
    """Controller file is unreadable or internally inconsistent."""

    code = Err.CONFIG_CONTROLLER_FILE


# ── Numerical errors (exit 2) ──


class NumericsError(RegforgeError):
    code = Err.NUMERICS_INVALID_MATRIX
    exit_code = ExitCode.DESIGN


class InvalidMatrix(NumericsError):
    """Non-finite entries or non-square input where a square one is required."""


class DimensionMismatch(NumericsError):
    code = Err.NUMERICS_DIMENSION


class SingularMatrix(NumericsError):
    code = Err.NUMERICS_SINGULAR


class ResolventPole(SingularMatrix):
    """The evaluation point lies (numerically) in the spectrum."""

    code = Err.NUMERICS_RESOLVENT_POLE


class ConvergenceFailure(NumericsError):
    code = Err.NUMERICS_CONVERGENCE


class NotHurwitz(NumericsError):
    code = Err.NUMERICS_NOT_HURWITZ


class NotStabilizable(NumericsError):
    code = Err.NUMERICS_NOT_STABILIZABLE


class NotDetectable(NumericsError):
    code = Err.NUMERICS_NOT_DETECTABLE


class ExponentialOverflow(NumericsError):
    code = Err.NUMERICS_OVERFLOW


class StepRejected(NumericsError):
    code = Err.NUMERICS_STEP_REJECTED


# ── Design errors (exit 2) ──


class DesignError(RegforgeError):
    exit_code = ExitCode.DESIGN


class TransmissionZero(DesignError):
    """The stabilized plant loses row rank at a design frequency."""

    code = Err.DESIGN_TRANSMISSION_ZERO

    def __init__(self, message: str = "", *, frequencies: list[float] | None = None) -> None:
        super().__init__(message)
        self.frequencies = list(frequencies or [])


class NonRealResidue(DesignError):
    code = Err.DESIGN_NON_REAL_RESIDUE


def envelope(code: str, message: str) -> dict[str, str]:
    """Standard failure payload embedded in report JSON.

    Yields ``{"code": "numerics.not_hurwitz", "message": "..."}`` so report
    consumers can switch on ``code`` and surface ``message`` verbatim.
    """
    return {"code": code, "message": message}
