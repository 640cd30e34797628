"""Pipeline orchestrator: design, simulate, verify, frequency response.

Every stage runs inside ``_stage`` so an error that escapes it carries the
stage name, and inside the tolerance context of the run so the numerics
see the run's ``[numerics]`` section.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from regforge.closedloop.robustness import RobustnessReport, robustness_suite
from regforge.closedloop.simulate import SimResult, simulate
from regforge.closedloop.system import (
    ClosedLoopSystem,
    assemble_closed_loop,
    blocking_residuals,
    certify_stability,
)
from regforge.control.controller import (
    ControllerRealization,
    assemble_controller,
    assembly_residual,
    design_K1,
    observer_identity_residual,
)
from regforge.control.freqdata import (
    FrequencyPoint,
    TransmissionZeroReport,
    assemble_freq_data,
    build_HK_truncated,
    check_transmission_zeros,
    compare_routes,
    compute_frequency_points,
    eval_PK_PKI_full,
    eval_PK_PKI_reduced,
    reduced_parts,
    sylvester_residual,
)
from regforge.control.internal_model import build_internal_model
from regforge.control.stabilization import (
    StabilizingGains,
    design_K0,
    design_stabilizing_gains,
)
from regforge.core.context import use_tolerances
from regforge.core.events import EventCallback, emit
from regforge.core.runconfig import ResolvedRun
from regforge.errors import (
    Err,
    NotHurwitz,
    RegforgeError,
    ResolventPole,
    SingularMatrix,
    envelope,
)
from regforge.model.plant import discretize, neumann_eigenbasis
from regforge.model.statespace import StateSpaceModel
from regforge.storage.controller_file import check_plant_hash
from regforge.utils.console import certificate, stage

logger = logging.getLogger("regforge.pipeline")


@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except RegforgeError as exc:
        raise exc.with_stage(name)


# ── Design ──


@dataclass
class DesignResult:
    plant: StateSpaceModel
    gains: StabilizingGains
    points: tuple[FrequencyPoint, ...]
    transmission_zeros: TransmissionZeroReport
    controller: ControllerRealization
    closed_loop: ClosedLoopSystem
    certificates: dict[str, float] = field(default_factory=dict)


def run_design(run: ResolvedRun, on_event: EventCallback | None = None) -> DesignResult:
    """Discretize, stabilize, evaluate frequency data and assemble the controller.

    Raises:
        RegforgeError: Any failure, tagged with the stage it surfaced in.
        NotHurwitz: If the assembled closed loop fails certification.
    """
    cfg = run.design
    freqs = tuple(run.signals.frequencies)
    with use_tolerances(run.numerics):
        emit(on_event, "discretize", 0.0, f"Discretizing on {run.plant.n_grid} nodes")
        with _stage("discretize"):
            stage("Discretizing", f"n_grid={run.plant.n_grid}")
            plant = discretize(run.plant)

        emit(on_event, "stabilize", 0.15, "Designing K0 and L")
        with _stage("stabilize"):
            stage("Stabilizing", "LQR state feedback and output injection")
            gains = design_stabilizing_gains(
                plant, cfg.q_weight, cfg.r_weight, cfg.observer_q_weight, cfg.observer_r_weight
            )

        emit(on_event, "freqdata", 0.3, f"Evaluating {len(freqs)} frequencies")
        with _stage("freqdata"):
            stage("Frequency data", ", ".join(f"{w:g}" for w in freqs))
            points = compute_frequency_points(plant, gains.K0, freqs, workers=cfg.workers)

        emit(on_event, "transmission_zeros", 0.45, "Checking P_K row rank")
        with _stage("transmission_zeros"):
            tz = check_transmission_zeros(points, cfg.tz_rel_tol)

        emit(on_event, "internal_model", 0.6, "Designing K1")
        with _stage("internal_model"):
            im = build_internal_model(freqs, plant.p)
            fd = assemble_freq_data(points, im)
            HK = fd.HK
            if cfg.hk_truncation is not None:
                basis = neumann_eigenbasis(run.plant, cfg.hk_truncation)
                HK = build_HK_truncated(plant, gains.K0, freqs, basis)
            K1 = design_K1(
                im.G1, fd.B1, cfg.im_q_weight, cfg.im_r_weight, margin=cfg.im_margin
            )

        emit(on_event, "assemble", 0.75, "Assembling controller")
        with _stage("assemble"):
            controller = assemble_controller(
                im,
                gains.L,
                gains.K0,
                K1,
                HK,
                plant,
                B1=fd.B1,
                plant_hash=run.plant_hash,
                hk_truncation=cfg.hk_truncation,
                tolerances=run.numerics.model_dump(),
            )

        emit(on_event, "certify", 0.9, "Certifying closed-loop stability")
        with _stage("certify"):
            cl = assemble_closed_loop(plant, controller)
            abscissa, stable = certify_stability(cl, run.verify.stab_floor)
            certificates = {
                "margin_feedback": gains.margin_feedback,
                "margin_injection": gains.margin_injection,
                "tz_min_sigma": min(tz.margins.values()),
                "im_abscissa": controller.im_abscissa,
                "closed_loop_abscissa": abscissa,
                "sylvester_residual": sylvester_residual(
                    fd.HK, im.G1, im.G2, plant, gains.K0
                ),
            }
            _print_certificates(certificates, run)
            if not stable:
                raise NotHurwitz(f"closed-loop abscissa {abscissa:.3e} is not negative")
    emit(on_event, "certify", 1.0, "Design complete", **certificates)
    return DesignResult(
        plant=plant,
        gains=gains,
        points=points,
        transmission_zeros=tz,
        controller=controller,
        closed_loop=cl,
        certificates=certificates,
    )


def _print_certificates(certificates: dict[str, float], run: ResolvedRun) -> None:
    checks = {
        "margin_feedback": certificates["margin_feedback"] > 0,
        "margin_injection": certificates["margin_injection"] > 0,
        "tz_min_sigma": certificates["tz_min_sigma"] > 0,
        "im_abscissa": certificates["im_abscissa"] < 0,
        "closed_loop_abscissa": certificates["closed_loop_abscissa"] <= -run.verify.stab_floor,
        "sylvester_residual": certificates["sylvester_residual"] <= run.verify.sylvester_tol,
    }
    for name, passed in checks.items():
        certificate(name, certificates[name], passed)


# ── Simulation ──


def initial_state(run: ResolvedRun, cl: ClosedLoopSystem) -> np.ndarray:
    """Plant part from ``initial_state`` sampled on the grid, controller at rest."""
    x0 = np.zeros(cl.dim)
    if run.initial_state is not None:
        x0[cl.plant_slice] = run.initial_state.sample(run.plant.grid())
    return x0


def run_simulation(
    run: ResolvedRun, controller: ControllerRealization, *, force: bool = False
) -> tuple[ClosedLoopSystem, SimResult]:
    """Simulate the configured plant under ``controller``.

    Raises:
        HashMismatch: If the controller was designed for another plant and
            ``force`` is not set.
    """
    sim = run.simulation
    with use_tolerances(run.numerics):
        with _stage("simulate"):
            check_plant_hash(controller, run.plant_hash, force=force)
            plant = discretize(run.plant)
            cl = assemble_closed_loop(plant, controller)
            stage("Simulating", f"t_final={sim.t_final:g}, dt={sim.step:g}, {sim.method}")
            result = simulate(
                cl,
                run.signals,
                initial_state(run, cl),
                sim.t_final,
                sim.step,
                method=sim.method,
                window_fraction=sim.window_fraction,
                snapshot_every=sim.snapshot_every,
            )
    return cl, result


# ── Verification ──


@dataclass
class CheckResult:
    name: str
    value: float | None
    threshold: float | None
    passed: bool
    detail: str = ""
    skipped: bool = False
    enforced: bool = True

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "passed": self.passed,
            "enforced": self.enforced,
            "skipped": self.skipped,
            "detail": self.detail,
        }
        if not self.passed:
            code = Err.VERIFY_SKIPPED if self.skipped else Err.VERIFY_CHECK_FAILED
            out["failure"] = envelope(code, self.detail or f"{self.name} failed")
        return out


@dataclass
class VerifyReport:
    plant_hash: str
    checks: list[CheckResult] = field(default_factory=list)
    robustness: RobustnessReport | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def check(self, name: str) -> CheckResult:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> dict:
        return {
            "plant_hash": self.plant_hash,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "robustness": [e.to_dict() for e in self.robustness.entries]
            if self.robustness
            else [],
        }


def observer_model(controller: ControllerRealization, weights) -> StateSpaceModel:
    """The plant copy inside the controller as a state-space model."""
    n, p = controller.n, controller.C.shape[0]
    return StateSpaceModel(
        A=controller.A,
        B=controller.B,
        B_d=np.zeros((n, 0)),
        C=controller.C,
        D=controller.D,
        D_d=np.zeros((p, 0)),
        weights=weights,
    )


def _skipped(name: str) -> CheckResult:
    return CheckResult(
        name=name,
        value=None,
        threshold=None,
        passed=False,
        skipped=True,
        detail="skipped: closed loop is not exponentially stable",
    )


def _route_check(model: StateSpaceModel, K0, freqs, run: ResolvedRun) -> CheckResult:
    rng = np.random.default_rng(run.verify.seed)
    probes = rng.standard_normal((model.n, run.verify.route_probes))
    worst, poles = 0.0, []
    for w in freqs:
        try:
            worst = max(worst, *compare_routes(model, K0, w, probes))
        except ResolventPole:
            poles.append(w)
    detail = ""
    if poles:
        detail = f"reduced route has a pole at ω = {', '.join(f'{w:g}' for w in poles)}"
    return CheckResult(
        name="route_equivalence",
        value=worst,
        threshold=run.verify.route_tol,
        passed=worst <= run.verify.route_tol,
        detail=detail,
    )


def run_verification(
    run: ResolvedRun,
    controller: ControllerRealization,
    *,
    force: bool = False,
    on_event: EventCallback | None = None,
) -> VerifyReport:
    """Run every check against ``controller`` and collect a report.

    Check failures are report entries; only configuration problems raise.
    """
    vcfg = run.verify
    report = VerifyReport(plant_hash=run.plant_hash)
    freqs = controller.internal_model.frequencies
    with use_tolerances(run.numerics):
        with _stage("verify"):
            check_plant_hash(controller, run.plant_hash, force=force)
            plant = discretize(run.plant)
            cl = assemble_closed_loop(plant, controller)

        emit(on_event, "stability", 0.0, "Certifying stability")
        stage("Stability")
        abscissa, stable = certify_stability(cl, vcfg.stab_floor)
        report.checks.append(
            CheckResult("stability", abscissa, -vcfg.stab_floor, stable)
        )

        emit(on_event, "blocking_zeros", 0.15, "Evaluating the error transfer")
        if stable:
            residuals = blocking_residuals(cl, freqs)
            worst = max(residuals.values())
            report.checks.append(
                CheckResult("blocking_zeros", worst, vcfg.blocking_tol, worst <= vcfg.blocking_tol)
            )
        else:
            report.checks.append(_skipped("blocking_zeros"))

        emit(on_event, "sylvester", 0.3, "Sylvester residual of H_K")
        model = observer_model(controller, plant.weights)
        residual = sylvester_residual(
            controller.HK, controller.G1, controller.G2, model, controller.K0
        )
        truncated = controller.hk_truncation is not None
        report.checks.append(
            CheckResult(
                "sylvester",
                residual,
                vcfg.sylvester_tol,
                truncated or residual <= vcfg.sylvester_tol,
                detail=f"informational: H_K truncated to N={controller.hk_truncation}"
                if truncated
                else "",
                enforced=not truncated,
            )
        )

        emit(on_event, "assembly_identity", 0.4, "K2 = K0 + K1·H_K")
        res = assembly_residual(controller)
        report.checks.append(
            CheckResult("assembly_identity", res, vcfg.assembly_tol, res <= vcfg.assembly_tol)
        )
        res = observer_identity_residual(controller)
        report.checks.append(
            CheckResult("observer_identity", res, vcfg.assembly_tol, res <= vcfg.assembly_tol)
        )

        emit(on_event, "route_equivalence", 0.5, "Direct vs. reduced route")
        report.checks.append(_route_check(model, controller.K0, freqs, run))

        emit(on_event, "robustness", 0.6, f"{len(vcfg.perturbations)} perturbations")
        if stable:
            stage("Robustness", ", ".join(f"{d:+g}" for d in vcfg.perturbations))
            robust = robustness_suite(
                run.plant,
                controller,
                vcfg.perturbations,
                run.signals,
                sim=run.simulation,
                stab_floor=vcfg.stab_floor,
                tracking_tol=vcfg.tracking_tol,
                workers=run.design.workers,
            )
            report.robustness = robust
            report.checks.append(
                CheckResult(
                    "robustness",
                    robust.worst_terminal_error,
                    vcfg.tracking_tol,
                    robust.passed,
                    detail=_robustness_detail(robust),
                )
            )
        else:
            report.checks.append(_skipped("robustness"))

    for c in report.checks:
        if c.value is not None:
            certificate(c.name, c.value, c.passed)
    emit(on_event, "verify", 1.0, "Verification complete", passed=report.passed)
    return report


def _robustness_detail(robust: RobustnessReport) -> str:
    unstable = [e.delta for e in robust.entries if not e.stable]
    if not unstable:
        return ""
    return "no tracking claim (unstable) for δ = " + ", ".join(f"{d:+g}" for d in unstable)


# ── Frequency response ──


@dataclass
class FreqRespRow:
    omega: float
    P: complex | None
    PK_direct: complex
    PK_reduced: complex | None
    G_K: complex | None
    disagreement: float | None
    pole: bool


def freqresp_rows(run: ResolvedRun, omegas) -> list[FreqRespRow]:
    """``P``, ``P_K`` (both routes) and ``G_K`` at each ω for the first channel.

    A pole on the reduced route marks the row instead of failing.
    """
    rows = []
    with use_tolerances(run.numerics):
        with _stage("freqresp"):
            plant = discretize(run.plant)
            K0 = design_K0(plant, run.design.q_weight, run.design.r_weight)
            for w in omegas:
                w = float(w)
                PK_dir, _ = eval_PK_PKI_full(plant, K0, w)
                pk = complex(PK_dir[0, 0])
                try:
                    P, G_K = reduced_parts(plant, K0, w)
                    PK_red, _ = eval_PK_PKI_reduced(plant, K0, w)
                except SingularMatrix:
                    rows.append(FreqRespRow(w, None, pk, None, None, None, True))
                    continue
                red = complex(PK_red[0, 0])
                diff = abs(pk - red) / max(abs(red), 1e-300)
                rows.append(
                    FreqRespRow(w, complex(P[0, 0]), pk, red, complex(G_K[0, 0]), diff, False)
                )
    logger.debug("Frequency response evaluated at %d points", len(rows))
    return rows
