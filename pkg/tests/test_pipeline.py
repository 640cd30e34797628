"""Tests for the design, verification and frequency-response pipelines."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from conftest import HEAT_CONFIG, heat_data, small_data, transmission_zero_data

from regforge.closedloop.system import blocking_residuals
from regforge.core.events import PipelineEvent
from regforge.core.pipeline import (
    freqresp_rows,
    initial_state,
    run_design,
    run_simulation,
    run_verification,
)
from regforge.core.runconfig import parse_run_config, resolve_run
from regforge.errors import Err, HashMismatch, TransmissionZero
from regforge.model.plant import PlantConfig, discretize
from regforge.numerics import spectral_abscissa

PI = math.pi


def _resolve(data: dict, **overrides):
    return resolve_run(parse_run_config(data), base_dir=HEAT_CONFIG.parent, overrides=overrides)


def _frozen(design):
    """The designed controller with K1 = 0: the internal model is left undamped."""
    ctrl = design.controller
    return dataclasses.replace(ctrl, K1=np.zeros_like(ctrl.K1), K2=ctrl.K0)


class TestDesign:
    def test_certificates(self, small_design, small_run):
        c = small_design.certificates
        assert set(c) == {
            "margin_feedback",
            "margin_injection",
            "tz_min_sigma",
            "im_abscissa",
            "closed_loop_abscissa",
            "sylvester_residual",
        }
        assert c["margin_feedback"] > 0 and c["margin_injection"] > 0
        assert c["tz_min_sigma"] > 0
        assert c["im_abscissa"] < -small_run.design.im_margin
        assert c["closed_loop_abscissa"] <= -small_run.verify.stab_floor
        assert c["sylvester_residual"] <= 1e-8

    def test_controller_carries_plant_hash(self, small_design, small_run):
        assert small_design.controller.plant_hash == small_run.plant_hash

    def test_events(self, small_run):
        events: list[PipelineEvent] = []
        run_design(small_run, events.append)
        stages = [e.stage for e in events]
        assert stages[0] == "discretize"
        assert stages.index("freqdata") < stages.index("transmission_zeros") < stages.index(
            "assemble"
        )
        progress = [e.progress for e in events]
        assert progress == sorted(progress) and progress[-1] == 1.0
        assert "closed_loop_abscissa" in events[-1].data

    def test_deterministic(self, small_run, small_design):
        again = run_design(small_run)
        np.testing.assert_array_equal(again.controller.K2, small_design.controller.K2)
        np.testing.assert_array_equal(again.controller.HK, small_design.controller.HK)

    def test_transmission_zero_is_tagged(self):
        """An output blind to the steady state cannot track a constant reference."""
        with pytest.raises(TransmissionZero) as excinfo:
            run_design(_resolve(transmission_zero_data()))
        assert excinfo.value.stage == "transmission_zeros"
        assert excinfo.value.frequencies == [0.0]
        assert str(excinfo.value).startswith("transmission_zeros: ")

    def test_transmission_zero_plant_is_detectable(self):
        """The zero comes from P_K(0), not from an unobservable mode."""
        data = transmission_zero_data()
        sys = discretize(PlantConfig.model_validate(data["plant"]))
        assert spectral_abscissa(sys.A) < 0.0
        assert abs((sys.C @ np.ones(sys.n)).item()) > 1e-6

    def test_truncated_HK_keeps_blocking(self):
        """A low-rank H_K changes the transient but not the blocking property."""
        run = _resolve(heat_data(), **{"design.hk_truncation": 20})
        design = run_design(run)
        assert design.controller.hk_truncation == 20
        assert design.certificates["closed_loop_abscissa"] < 0
        residuals = blocking_residuals(design.closed_loop, (0.0, PI, 2 * PI))
        assert max(residuals.values()) <= 1e-8


class TestSimulation:
    def test_initial_state_profile(self, small_design):
        data = small_data()
        data["initial_state"] = {"kind": "constant", "value": 2.0}
        run = _resolve(data)
        x0 = initial_state(run, small_design.closed_loop)
        cl = small_design.closed_loop
        np.testing.assert_array_equal(x0[cl.plant_slice], np.full(12, 2.0))
        assert not x0[cl.n_plant :].any()

    def test_hash_checked(self, small_design, heat_run):
        with pytest.raises(HashMismatch):
            run_simulation(heat_run, small_design.controller)

    def test_run(self, small_run, small_design):
        run = _resolve(small_data(), **{"simulation.t_final": 1.0, "simulation.dt": 0.01})
        cl, result = run_simulation(run, small_design.controller)
        assert cl.dim == small_design.closed_loop.dim
        assert result.t[-1] == 1.0 and len(result.t) == 101


class TestVerification:
    @pytest.fixture(scope="class")
    def quick_run(self):
        """Small grid without the perturbation sweep."""
        return _resolve(small_data(), **{"verify.perturbations": []})

    def test_nominal_passes(self, quick_run, small_design):
        report = run_verification(quick_run, small_design.controller)
        assert report.passed, [c.to_dict() for c in report.failures]
        assert [c.name for c in report.checks] == [
            "stability",
            "blocking_zeros",
            "sylvester",
            "assembly_identity",
            "observer_identity",
            "route_equivalence",
            "robustness",
        ]
        assert report.check("blocking_zeros").value <= 1e-8

    def test_route_pole_at_zero_is_noted(self, quick_run, small_design):
        """The Neumann heat plant has an eigenvalue at 0; the direct route still runs."""
        check = run_verification(quick_run, small_design.controller).check("route_equivalence")
        assert check.passed
        assert "pole" in check.detail

    def test_unstable_skips_dependent_checks(self, quick_run, small_design):
        report = run_verification(quick_run, _frozen(small_design))
        assert not report.passed
        assert not report.check("stability").passed
        for name in ("blocking_zeros", "robustness"):
            check = report.check(name)
            assert check.skipped and not check.passed
            assert check.to_dict()["failure"]["code"] == Err.VERIFY_SKIPPED
        assert report.check("assembly_identity").passed

    def test_tampered_HK(self, quick_run, small_design):
        ctrl = small_design.controller
        HK = ctrl.HK * 1.01
        tampered = dataclasses.replace(ctrl, HK=HK, K2=ctrl.K0 + ctrl.K1 @ HK)
        report = run_verification(quick_run, tampered)
        sylvester = report.check("sylvester")
        assert not sylvester.passed and sylvester.enforced
        assert sylvester.to_dict()["failure"]["code"] == Err.VERIFY_CHECK_FAILED

    def test_truncated_sylvester_is_informational(self, small_design, quick_run):
        ctrl = dataclasses.replace(small_design.controller, hk_truncation=5)
        check = run_verification(quick_run, ctrl).check("sylvester")
        assert check.passed and not check.enforced
        assert "informational" in check.detail

    def test_report_dict(self, quick_run, small_design):
        data = run_verification(quick_run, small_design.controller).to_dict()
        assert data["passed"] is True
        assert data["plant_hash"] == quick_run.plant_hash
        assert data["robustness"] == []

    def test_events(self, quick_run, small_design):
        events: list[PipelineEvent] = []
        run_verification(quick_run, small_design.controller, on_event=events.append)
        assert events[-1].stage == "verify" and events[-1].data == {"passed": True}

    @pytest.mark.slow
    def test_heat_with_perturbations(self, heat_run, heat_design):
        report = run_verification(heat_run, heat_design.controller)
        assert report.passed, [c.to_dict() for c in report.failures]
        assert [e.delta for e in report.robustness.entries] == [-0.1, 0.0, 0.1]


class TestFreqResp:
    def test_rows(self, small_run):
        rows = freqresp_rows(small_run, [0.0, PI, 2.5])
        assert [r.omega for r in rows] == [0.0, PI, 2.5]
        assert rows[0].pole and rows[0].PK_reduced is None
        for row in rows[1:]:
            assert not row.pole
            assert row.disagreement <= 1e-9
            assert row.PK_direct == pytest.approx(row.PK_reduced, rel=1e-9)
