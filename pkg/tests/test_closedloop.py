"""Tests for closed-loop assembly, stability and blocking zeros."""

from __future__ import annotations

import math

import numpy as np
import pytest

from regforge.closedloop.system import (
    assemble_closed_loop,
    assemble_closed_loop_flat,
    blocking_residuals,
    certify_stability,
    error_transfer_at,
)
from regforge.control.controller import assemble_controller
from regforge.errors import DimensionMismatch
from regforge.numerics import eigenvalues

PI = math.pi


class TestAssembly:
    def test_plant_block_is_plant(self, small_design):
        cl = small_design.closed_loop
        plant = small_design.plant
        np.testing.assert_array_equal(cl.A_e[: plant.n, : plant.n], plant.A)
        assert cl.dim == plant.n + small_design.controller.dim
        assert cl.n_im == 5 and cl.n_d == 2

    def test_slices_partition_state(self, small_design):
        cl = small_design.closed_loop
        sizes = [len(range(cl.dim)[s]) for s in (cl.plant_slice, cl.im_slice, cl.observer_slice)]
        assert sizes == [12, 5, 12]

    def test_zero_controller_decouples(self, small_design):
        """With 𝒢₂ = 0 and K = 0 the loop is block diagonal."""
        plant = small_design.plant
        G1 = -np.eye(3)
        cl = assemble_closed_loop_flat(plant, G1, np.zeros((3, 1)), np.zeros((1, 3)))
        assert not cl.A_e[: plant.n, plant.n :].any()
        assert not cl.A_e[plant.n :, : plant.n].any()
        np.testing.assert_array_equal(cl.A_e[plant.n :, plant.n :], G1)
        vals = eigenvalues(cl.A_e)
        assert np.sum(np.isclose(vals, -1.0)) == 3

    def test_exogenous_maps(self, small_design):
        """D_e = [D_d, −I] and the reference enters the controller through −𝒢₂."""
        cl = small_design.closed_loop
        G2f = small_design.controller.flat[1]
        np.testing.assert_array_equal(cl.D_e[:, -1], [-1.0])
        np.testing.assert_array_equal(cl.B_e[12:, -1:], -G2f)
        assert not cl.B_e[:12, -1].any()

    def test_controller_shape_mismatch(self, small_design):
        with pytest.raises(DimensionMismatch):
            assemble_closed_loop_flat(
                small_design.plant, np.zeros((3, 3)), np.zeros((3, 2)), np.zeros((1, 3))
            )

    def test_observer_dimension_mismatch(self, small_design, heat_design):
        with pytest.raises(DimensionMismatch):
            assemble_closed_loop(heat_design.plant, small_design.controller)


class TestStability:
    def test_designed_loop_is_stable(self, heat_design):
        abscissa, passed = certify_stability(heat_design.closed_loop)
        assert passed and abscissa <= -1e-6
        assert heat_design.certificates["closed_loop_abscissa"] == pytest.approx(abscissa)

    def test_uncontrolled_internal_model_not_certified(self, small_design):
        """With K1 = 0 the internal-model modes stay on the imaginary axis."""
        ctrl = small_design.controller
        frozen = assemble_controller(
            ctrl.internal_model, ctrl.L, ctrl.K0, np.zeros_like(ctrl.K1), ctrl.HK,
            small_design.plant, B1=ctrl.B1,
        )
        abscissa, passed = certify_stability(assemble_closed_loop(small_design.plant, frozen))
        assert not passed
        assert abs(abscissa) <= 1e-8


class TestBlockingZeros:
    def test_error_transfer_vanishes_at_design_frequencies(self, heat_design):
        residuals = blocking_residuals(heat_design.closed_loop, (0.0, PI, 2 * PI))
        assert max(residuals.values()) <= 1e-8

    def test_nonzero_off_design(self, heat_design):
        T = error_transfer_at(heat_design.closed_loop, 1.3 * PI)
        assert np.linalg.norm(T) > 1e-6

    def test_high_frequency_limit(self, small_design):
        """T_e(iω) → D_e as ω → ∞."""
        cl = small_design.closed_loop
        T = error_transfer_at(cl, 1e9)
        assert np.linalg.norm(T - cl.D_e) <= 1e-3

    def test_perturbed_gains_keep_blocking(self, heat_design):
        """Small changes to K1 and H_K keep stability and the blocking property."""
        ctrl = heat_design.controller
        rng = np.random.default_rng(42)
        K1 = ctrl.K1 * (1.0 + 1e-6 * rng.standard_normal(ctrl.K1.shape))
        HK = ctrl.HK * (1.0 + 1e-6 * rng.standard_normal(ctrl.HK.shape))
        perturbed = assemble_controller(
            ctrl.internal_model, ctrl.L, ctrl.K0, K1, HK, heat_design.plant, B1=ctrl.B1
        )
        cl = assemble_closed_loop(heat_design.plant, perturbed)
        assert certify_stability(cl)[1]
        assert max(blocking_residuals(cl, ctrl.internal_model.frequencies).values()) <= 1e-8
