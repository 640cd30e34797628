"""Frequency data of the stabilized plant and the real matrices ``B1``, ``H_K``.

With ``A_K = A + B·K0`` and ``C_K = C + D·K0``:

- ``P_K(λ) = C_K(λ − A_K)⁻¹B + D`` is the transfer function of the plant
  under state feedback, and ``P_KI(λ) = C_K(λ − A_K)⁻¹`` the transfer from
  an added distributed input.
- The *direct* route solves the discrete boundary-value problem
  ``(iω − A_K)x₀ = B·u₀ + ψ₀`` and reads ``y₀ = C_K x₀ + D u₀``; it is valid
  at ω = 0 whenever ``K0`` stabilizes.
- The *reduced* route uses only the open-loop resolvent:
  ``P_K = P(I − G_K)⁻¹`` and ``P_KI = C·R + P_K K0 R`` with
  ``G_K = K0·R·B``. It fails where ``iω`` is an eigenvalue of ``A``.

Only the values at ``+iω`` are computed; those at ``−iω`` follow by
conjugation since the plant is real.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from regforge.control.internal_model import InternalModel
from regforge.core.context import WORKER_THREAD_PREFIX, submit_in_context, tolerances
from regforge.errors import (
    DimensionMismatch,
    NonRealResidue,
    ResolventPole,
    SingularMatrix,
    TransmissionZero,
)
from regforge.model.statespace import StateSpaceModel
from regforge.numerics.linalg import solve_linear
from regforge.numerics.matrix_equations import solve_sylvester

logger = logging.getLogger("regforge.control")


@dataclass(frozen=True, eq=False)
class FrequencyPoint:
    """``P_K`` and ``P_KI`` at ``+iω``; the ``−iω`` values default to conjugates."""

    omega: float
    PK: np.ndarray
    PKI: np.ndarray
    PK_minus_value: np.ndarray | None = None
    PKI_minus_value: np.ndarray | None = None

    @property
    def PK_minus(self) -> np.ndarray:
        return np.conj(self.PK) if self.PK_minus_value is None else self.PK_minus_value

    @property
    def PKI_minus(self) -> np.ndarray:
        return np.conj(self.PKI) if self.PKI_minus_value is None else self.PKI_minus_value


@dataclass(frozen=True, eq=False)
class FreqData:
    points: tuple[FrequencyPoint, ...]
    B1: np.ndarray
    HK: np.ndarray
    HK_truncation: int | None = None

    @property
    def frequencies(self) -> tuple[float, ...]:
        return tuple(pt.omega for pt in self.points)


@dataclass
class TransmissionZeroReport:
    """Minimum singular value of ``P_K(iω_k)`` per frequency."""

    margins: dict[float, float]
    threshold: float
    failures: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


# ── Evaluation routes ──


def stabilized_matrices(sys: StateSpaceModel, K0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(A + B·K0, C + D·K0)``."""
    K0 = np.asarray(K0, dtype=float)
    if K0.shape != (sys.m, sys.n):
        raise DimensionMismatch(f"K0 has shape {K0.shape}, expected {(sys.m, sys.n)}")
    return sys.A + sys.B @ K0, sys.C + sys.D @ K0


def _stabilized_solve(sys: StateSpaceModel, K0: np.ndarray, omega: float, rhs: np.ndarray):
    A_K, C_K = stabilized_matrices(sys, K0)
    try:
        X = solve_linear(1j * omega * np.eye(sys.n) - A_K, rhs.astype(complex))
    except SingularMatrix as exc:
        raise ResolventPole(f"iω = {omega}i lies in the spectrum of A + B·K0") from exc
    return X, C_K


def eval_PK_PKI_direct(
    sys: StateSpaceModel, K0: np.ndarray, omega: float, u0, psi0
) -> np.ndarray:
    """``y₀ = P_K(iω)u₀ + P_KI(iω)ψ₀`` from one boundary-value solve.

    Args:
        u0: Input value (scalar or length-m vector).
        psi0: Grid vector added as a distributed input.
    """
    u0 = np.atleast_1d(np.asarray(u0, dtype=complex))
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    if u0.shape != (sys.m,) or psi0.shape != (sys.n,):
        raise DimensionMismatch("u0 must have length m and psi0 length n")
    x0, C_K = _stabilized_solve(sys, K0, omega, (sys.B @ u0 + psi0)[:, None])
    return (C_K @ x0)[:, 0] + sys.D @ u0


def eval_PK_PKI_full(sys: StateSpaceModel, K0: np.ndarray, omega: float):
    """Complete ``(P_K(iω), P_KI(iω))`` from the direct route on all basis probes.

    One factorization with the right-hand side ``[B, I]``: the first ``m``
    columns are the probes ``u₀ = e_j``, the rest ``ψ₀ = e_j``.
    """
    X, C_K = _stabilized_solve(sys, K0, omega, np.hstack([sys.B, np.eye(sys.n)]))
    Y = C_K @ X
    return Y[:, : sys.m] + sys.D, Y[:, sys.m :]


def eval_PK_PKI_reduced(sys: StateSpaceModel, K0: np.ndarray, omega: float):
    """``(P_K(iω), P_KI(iω))`` through the open-loop resolvent ``R(iω, A)``.

    Raises:
        ResolventPole: If ``iω`` is in the spectrum of ``A`` (e.g. ω = 0 for
            the pure Neumann plant) or of ``A + B·K0``.
    """
    K0 = np.asarray(K0, dtype=float)
    stabilized_matrices(sys, K0)
    try:
        X = solve_linear(
            1j * omega * np.eye(sys.n) - sys.A, np.hstack([sys.B, np.eye(sys.n)]).astype(complex)
        )
    except SingularMatrix as exc:
        raise ResolventPole(f"iω = {omega}i lies in the spectrum of A") from exc
    RB, R = X[:, : sys.m], X[:, sys.m :]
    P = sys.C @ RB + sys.D
    G_K = K0 @ RB
    try:
        # P_K = P (I − G_K)⁻¹  ⇔  (I − G_K)ᵀ P_Kᵀ = Pᵀ
        PK = solve_linear((np.eye(sys.m) - G_K).T, P.T).T
    except SingularMatrix as exc:
        raise ResolventPole(f"iω = {omega}i lies in the spectrum of A + B·K0") from exc
    PKI = sys.C @ R + PK @ (K0 @ R)
    return PK, PKI


def reduced_parts(sys: StateSpaceModel, K0: np.ndarray, omega: float):
    """``(P(iω), G_K(iω))`` of the reduced route, for frequency-response tables."""
    X = solve_linear(1j * omega * np.eye(sys.n) - sys.A, sys.B.astype(complex))
    return sys.C @ X + sys.D, np.asarray(K0) @ X


def compare_routes(
    sys: StateSpaceModel, K0: np.ndarray, omega: float, probes: np.ndarray
) -> tuple[float, float]:
    """Relative disagreement of ``P_K`` and ``P_KI·ψ`` between the two routes.

    Args:
        probes: ``n × k`` array of distributed inputs ψ.

    Returns:
        ``(pk_error, pki_error)``; ``pki_error`` is the worst over the probes.
    """
    PK_red, PKI_red = eval_PK_PKI_reduced(sys, K0, omega)
    PK_dir = eval_PK_PKI_direct(sys, K0, omega, np.ones(sys.m), np.zeros(sys.n))
    pk_ref = PK_red @ np.ones(sys.m)
    pk_error = float(np.linalg.norm(PK_dir - pk_ref) / max(np.linalg.norm(pk_ref), 1e-300))
    pki_error = 0.0
    for psi in np.asarray(probes).T:
        direct = eval_PK_PKI_direct(sys, K0, omega, np.zeros(sys.m), psi)
        reduced = PKI_red @ psi
        scale = max(float(np.linalg.norm(reduced)), 1e-300)
        pki_error = max(pki_error, float(np.linalg.norm(direct - reduced)) / scale)
    return pk_error, pki_error


def compute_frequency_points(
    sys: StateSpaceModel, K0: np.ndarray, frequencies, workers: int = 1
) -> tuple[FrequencyPoint, ...]:
    """Evaluate ``P_K`` and ``P_KI`` at every frequency (direct route).

    Frequencies are independent, so they run on a thread pool when
    ``workers > 1``.
    """

    def evaluate(omega: float) -> FrequencyPoint:
        PK, PKI = eval_PK_PKI_full(sys, K0, omega)
        return FrequencyPoint(omega=float(omega), PK=PK, PKI=PKI)

    freqs = [float(w) for w in frequencies]
    if workers <= 1 or len(freqs) <= 1:
        return tuple(evaluate(w) for w in freqs)
    with ThreadPoolExecutor(
        max_workers=min(workers, len(freqs)), thread_name_prefix=WORKER_THREAD_PREFIX
    ) as pool:
        futures = [submit_in_context(pool, evaluate, w) for w in freqs]
        return tuple(f.result() for f in futures)


# ── Assembly ──


def _real_blocks(points, plus, minus) -> np.ndarray:
    """Stack ``Q(0)`` and ``½[Q(iω)+Q(−iω); iQ(iω)−iQ(−iω)]`` and strip the zero imaginary part."""
    blocks = []
    for pt in points:
        qp, qm = plus(pt), minus(pt)
        if pt.omega == 0.0:
            blocks.append(qp)
        else:
            blocks.append(0.5 * (qp + qm))
            blocks.append(0.5j * (qp - qm))
    stacked = np.vstack(blocks)
    scale = max(float(np.max(np.abs(stacked), initial=0.0)), 1.0)
    residue = float(np.max(np.abs(stacked.imag), initial=0.0))
    limit = tolerances().imag_residue_tol * scale
    if residue > limit:
        raise NonRealResidue(f"imaginary residue {residue:.3e} exceeds {limit:.3e}")
    return np.ascontiguousarray(stacked.real)


def build_B1(points) -> np.ndarray:
    """``B1 = [P_K(0); B1¹; …; B1^q]`` with ``B1^k = [Re P_K(iω_k); −Im P_K(iω_k)]``.

    Raises:
        NonRealResidue: If the ``±iω`` values are not conjugate.
    """
    return _real_blocks(points, lambda pt: pt.PK, lambda pt: pt.PK_minus)


def build_HK(points) -> np.ndarray:
    """``H_K = [P_KI(0); H_K¹; …; H_K^q]``, same block layout as ``build_B1``."""
    return _real_blocks(points, lambda pt: pt.PKI, lambda pt: pt.PKI_minus)


def build_HK_truncated(
    sys: StateSpaceModel, K0: np.ndarray, frequencies, basis: np.ndarray
) -> np.ndarray:
    """Finite-rank ``H_K^N = Σₙ P_KI(±iω_k)ψₙ ⟨·, ψₙ⟩``.

    Solves one direct-route problem per basis vector and frequency, so
    ``H_K`` is never formed; the result equals ``H_K`` composed with the
    weighted orthogonal projection onto ``span{ψₙ}``.

    Args:
        basis: ``n × N`` array, orthonormal in the weighted inner product.
    """
    basis = np.asarray(basis, dtype=float).reshape(sys.n, -1)
    points = []
    for omega in frequencies:
        if basis.shape[1] == 0:
            Y = np.zeros((sys.p, 0), dtype=complex)
        else:
            X, C_K = _stabilized_solve(sys, K0, float(omega), basis)
            Y = C_K @ X
        points.append(FrequencyPoint(omega=float(omega), PK=np.zeros((sys.p, sys.m)), PKI=Y))
    projection = basis.T * sys.weights[None, :]
    Y_real = _real_blocks(points, lambda pt: pt.PKI, lambda pt: pt.PKI_minus)
    return Y_real @ projection


def assemble_freq_data(points, im: InternalModel) -> FreqData:
    """Assemble ``B1`` and ``H_K`` in the block order of the internal model."""
    points = tuple(points)
    if tuple(pt.omega for pt in points) != im.frequencies:
        raise DimensionMismatch("frequency points do not match the internal model frequencies")
    return FreqData(points=points, B1=build_B1(points), HK=build_HK(points))


# ── Checks ──


def sylvester_residual(HK, G1, G2, sys: StateSpaceModel, K0: np.ndarray) -> float:
    """``‖G1·H_K − H_K·A_K − G2·C_K‖ / ‖G2·C_K‖``."""
    A_K, C_K = stabilized_matrices(sys, K0)
    rhs = np.asarray(G2) @ C_K
    res = np.asarray(G1) @ HK - HK @ A_K - rhs
    return float(np.linalg.norm(res) / np.linalg.norm(rhs))


def solve_HK_sylvester(G1, G2, sys: StateSpaceModel, K0: np.ndarray) -> np.ndarray:
    """``H_K`` as the solution of ``G1·H − H·A_K = G2·C_K`` (Kronecker solve)."""
    A_K, C_K = stabilized_matrices(sys, K0)
    return solve_sylvester(np.asarray(G1), -A_K, np.asarray(G2) @ C_K)


def check_transmission_zeros(
    points, rel_tol: float = 1e-8, *, raise_on_failure: bool = True
) -> TransmissionZeroReport:
    """Require full row rank of ``P_K(iω_k)`` at every design frequency.

    The threshold is ``rel_tol`` times the largest ``‖P_K(iω_k)‖``.

    Raises:
        TransmissionZero: Listing the offending frequencies, unless
            ``raise_on_failure`` is false.
    """
    points = tuple(points)
    sigmas = {}
    norms = []
    for pt in points:
        sv = np.linalg.svd(np.atleast_2d(pt.PK), compute_uv=False)
        p = pt.PK.shape[0]
        sigmas[pt.omega] = float(sv[p - 1]) if len(sv) >= p else 0.0
        norms.append(float(sv[0]) if len(sv) else 0.0)
    threshold = rel_tol * max(norms, default=0.0)
    # Strictly below the threshold fails; an exactly singular P_K fails even when
    # every P_K vanishes and the threshold is 0.
    failures = [w for w, s in sigmas.items() if s < threshold or s == 0.0]
    report = TransmissionZeroReport(margins=sigmas, threshold=threshold, failures=failures)
    if failures and raise_on_failure:
        raise TransmissionZero(
            f"P_K loses row rank at ω = {', '.join(f'{w:g}' for w in failures)}",
            frequencies=failures,
        )
    return report
