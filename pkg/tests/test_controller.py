"""Tests for K1 design and controller assembly."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from regforge.control.controller import (
    assemble_controller,
    assembly_residual,
    design_K1,
    observer_identity_residual,
)
from regforge.errors import DimensionMismatch, NotStabilizable
from regforge.numerics import eigenvalues, spectral_abscissa


class TestDesignK1:
    def test_scalar(self):
        """G1 = 0, B1 = 1: X = 1, K1 = −1."""
        K1 = design_K1([[0.0]], [[1.0]])
        assert K1[0, 0] == pytest.approx(-1.0, abs=1e-10)

    def test_margin(self):
        """With margin 0.5 the closed-loop pole is −(1+√5)/2."""
        K1 = design_K1([[0.0]], [[1.0]], margin=0.5)
        assert K1[0, 0] == pytest.approx(-(1.0 + math.sqrt(5.0)) / 2.0, abs=1e-10)

    def test_rotation_block(self):
        G1 = math.pi * np.array([[0.0, 1.0], [-1.0, 0.0]])
        B1 = np.array([[0.3], [-0.7]])
        K1 = design_K1(G1, B1, margin=0.5)
        assert spectral_abscissa(G1 + B1 @ K1) < -0.5

    def test_uncontrollable(self):
        """A zero row of B1 at a design frequency means a transmission zero."""
        with pytest.raises(NotStabilizable):
            design_K1([[0.0]], [[0.0]])

    def test_row_mismatch(self):
        with pytest.raises(DimensionMismatch):
            design_K1(np.zeros((2, 2)), np.ones((3, 1)))


class TestRealization:
    def test_K2_identity(self, small_design):
        ctrl = small_design.controller
        np.testing.assert_array_equal(ctrl.K2, ctrl.K0 + ctrl.K1 @ ctrl.HK)
        assert assembly_residual(ctrl) == 0.0

    def test_observer_identity(self, small_design):
        assert observer_identity_residual(small_design.controller) <= 1e-12

    def test_observer_identity_with_feedthrough(self, small_design):
        """The ŷ row carries D·u; the identity holds for a nonzero D as well."""
        ctrl = dataclasses.replace(small_design.controller, D=np.array([[0.3]]))
        assert ctrl.internal_model.dim != ctrl.internal_model.p
        assert observer_identity_residual(ctrl) <= 1e-12

    def test_observer_identity_detects_wrong_generator(self, small_design, monkeypatch):
        ctrl = small_design.controller
        G1f, G2f, K = ctrl.flat
        wrong = G1f.copy()
        wrong[-1, -1] += 1.0
        monkeypatch.setattr(type(ctrl), "flat", property(lambda self: (wrong, G2f, K)))
        assert observer_identity_residual(ctrl) > 1e-6

    def test_internal_model_stable_with_margin(self, small_design, small_run):
        ctrl = small_design.controller
        assert ctrl.im_abscissa < -small_run.design.im_margin

    def test_dimensions(self, small_design):
        ctrl = small_design.controller
        assert ctrl.dim == ctrl.internal_model.dim + ctrl.n == 5 + 12
        G1f, G2f, K = ctrl.flat
        assert G1f.shape == (17, 17) and G2f.shape == (17, 1) and K.shape == (1, 17)

    def test_flat_contains_internal_model_spectrum(self, small_design):
        """spectrum(G1) ⊂ spectrum(𝒢₁): the flat generator is block triangular."""
        ctrl = small_design.controller
        flat_vals = eigenvalues(ctrl.flat[0])
        for lam in eigenvalues(ctrl.G1):
            assert np.min(np.abs(flat_vals - lam)) <= 1e-6

    def test_derivative_matches_flat(self, small_design):
        """The structured equations and (𝒢₁, 𝒢₂, K) describe the same controller."""
        ctrl = small_design.controller
        rng = np.random.default_rng(5)
        state = rng.standard_normal(ctrl.dim)
        e = rng.standard_normal(1)
        G1f, G2f, K = ctrl.flat
        z1, xhat = ctrl.split(state)
        dz, dx = ctrl.derivative(z1, xhat, e)
        expected = G1f @ state + G2f @ e
        np.testing.assert_allclose(np.concatenate([dz, dx]), expected, rtol=1e-10, atol=1e-9)
        np.testing.assert_allclose(ctrl.output(z1, xhat), K @ state, rtol=1e-12)

    def test_rest_state(self, small_design):
        ctrl = small_design.controller
        z1, xhat = ctrl.split(np.zeros(ctrl.dim))
        dz, dx = ctrl.derivative(z1, xhat, np.zeros(1))
        assert not dz.any() and not dx.any()

    def test_tampered_K2_detected(self, small_design):
        ctrl = dataclasses.replace(small_design.controller, K2=small_design.controller.K2 * 1.01)
        assert assembly_residual(ctrl) > 1e-6


class TestAssemble:
    def test_default_B1(self, small_design):
        """Without an explicit B1 it is rebuilt as H_K·B + G2·D."""
        ctrl = small_design.controller
        plant = small_design.plant
        rebuilt = assemble_controller(
            ctrl.internal_model, ctrl.L, ctrl.K0, ctrl.K1, ctrl.HK, plant
        )
        np.testing.assert_allclose(rebuilt.B1, ctrl.B1, rtol=1e-10, atol=1e-14)
        np.testing.assert_array_equal(rebuilt.K2, ctrl.K2)

    @pytest.mark.parametrize(
        "name, shape",
        [("L", (3, 1)), ("K0", (1, 3)), ("K1", (1, 2)), ("HK", (2, 12))],
        ids=["L", "K0", "K1", "HK"],
    )
    def test_shape_checks(self, small_design, name, shape):
        ctrl = small_design.controller
        kwargs = {"L": ctrl.L, "K0": ctrl.K0, "K1": ctrl.K1, "HK": ctrl.HK}
        kwargs[name] = np.zeros(shape)
        with pytest.raises(DimensionMismatch):
            assemble_controller(ctrl.internal_model, plant=small_design.plant, **kwargs)
