"""Tests for the stabilizing gains K0 and L."""

from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import scalar_system

from regforge.control.stabilization import (
    design_K0,
    design_L,
    design_stabilizing_gains,
    hautus_controllable,
    is_hurwitz,
    k0_kernel,
)
from regforge.control.internal_model import build_internal_model
from regforge.model.plant import discretize
from regforge.model.profiles import ConstantProfile


@pytest.fixture
def heat(plant_cfg):
    return discretize(plant_cfg.with_grid(20))


class TestGains:
    def test_K0_stabilizes(self, heat):
        K0 = design_K0(heat)
        assert K0.shape == (1, heat.n)
        ok, abscissa = is_hurwitz(heat.A + heat.B @ K0)
        assert ok and abscissa < 0

    def test_L_stabilizes(self, heat):
        L = design_L(heat)
        assert L.shape == (heat.n, 1)
        assert is_hurwitz(heat.A + L @ heat.C)[0]

    def test_L_is_weighted_adjoint_of_dual_K0(self, heat):
        """L = W⁻¹·K0(dual)ᵀ: the observer design is the dual LQR problem."""
        L = design_L(heat)
        K0_dual = design_K0(heat.dual())
        expected = K0_dual.T / heat.weights[:, None]
        assert np.linalg.norm(L - expected) <= 1e-6 * np.linalg.norm(L)

    def test_margins_recorded(self, heat):
        gains = design_stabilizing_gains(heat)
        assert gains.margin_feedback > 0 and gains.margin_injection > 0
        assert gains.margin_feedback == pytest.approx(-is_hurwitz(heat.A + heat.B @ gains.K0)[1])

    def test_heavier_control_penalty_shrinks_gain(self, heat):
        cheap = design_K0(heat, r_weight=1.0)
        costly = design_K0(heat, r_weight=100.0)
        assert np.linalg.norm(costly) < np.linalg.norm(cheap)

    def test_kernel_scaling(self, heat):
        """K0·x = −Σ wᵢ xᵢ k₀(ξᵢ)."""
        K0 = design_K0(heat)
        kernel = k0_kernel(K0, heat.weights)
        x = np.linspace(-1.0, 1.0, heat.n)
        assert (K0 @ x)[0] == pytest.approx(-np.sum(heat.weights * x * kernel[0]))


class TestScalarGains:
    def test_K0(self):
        """A = −1, B = 1, q = r = 1: K0 = −(√2 − 1)."""
        K0 = design_K0(scalar_system())
        assert K0[0, 0] == pytest.approx(-(math.sqrt(2.0) - 1.0), abs=1e-10)

    def test_L(self):
        """A = −1, C = 1: the dual problem gives the same number."""
        L = design_L(scalar_system())
        assert L[0, 0] == pytest.approx(-(math.sqrt(2.0) - 1.0), abs=1e-10)

    def test_no_state_cost_no_gain(self):
        K0 = design_K0(scalar_system(-2.0), q_weight=0.0)
        L = design_L(scalar_system(-2.0), q_weight=0.0)
        np.testing.assert_allclose(K0, 0.0, atol=1e-14)
        np.testing.assert_allclose(L, 0.0, atol=1e-14)

    def test_damped_plant_no_state_cost(self, plant_cfg):
        """An already Hurwitz plant needs no feedback when states cost nothing."""
        sys = discretize(plant_cfg.model_copy(update={"reaction": ConstantProfile(value=-1.0)}))
        assert is_hurwitz(sys.A)[0]
        np.testing.assert_allclose(design_K0(sys, q_weight=0.0), 0.0, atol=1e-12)


class TestIsHurwitz:
    def test_scalar(self):
        ok, abscissa = is_hurwitz([[-1.0]])
        assert ok and abscissa == pytest.approx(-1.0)

    def test_internal_model_is_marginal(self):
        """G1 has a purely imaginary spectrum: abscissa 0, not Hurwitz."""
        ok, abscissa = is_hurwitz(build_internal_model([0.0, math.pi, 2 * math.pi], 1).G1)
        assert not ok
        assert abscissa == pytest.approx(0.0, abs=1e-12)

    def test_damped_oscillator(self):
        """Roots of λ² + λ + 1 have real part −½."""
        ok, abscissa = is_hurwitz([[0.0, 1.0], [-1.0, -1.0]])
        assert ok and abscissa == pytest.approx(-0.5, abs=1e-12)


class TestHautus:
    def test_uncontrolled_mode(self):
        assert not hautus_controllable([[0.0]], [[0.0]])

    def test_controlled_mode(self):
        assert hautus_controllable([[0.0]], [[1.0]])

    def test_rotation_needs_nonzero_projection(self):
        """A rotation block is controllable from any nonzero input column."""
        G1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
        assert hautus_controllable(G1, [[1.0], [0.0]])
        assert not hautus_controllable(G1, [[0.0], [0.0]])

    def test_repeated_block_single_input(self):
        """Two copies of the same frequency cannot be steered by one input."""
        G1 = np.zeros((2, 2))
        assert not hautus_controllable(G1, [[1.0], [1.0]])
