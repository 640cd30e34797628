"""Tests for P_K / P_KI evaluation and the real matrices B1, H_K."""

from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import scalar_system

from regforge.control.freqdata import (
    FrequencyPoint,
    assemble_freq_data,
    build_B1,
    build_HK,
    build_HK_truncated,
    check_transmission_zeros,
    compare_routes,
    compute_frequency_points,
    eval_PK_PKI_direct,
    eval_PK_PKI_full,
    eval_PK_PKI_reduced,
    solve_HK_sylvester,
    stabilized_matrices,
    sylvester_residual,
)
from regforge.control.internal_model import build_internal_model
from regforge.control.stabilization import design_K0, hautus_controllable
from regforge.errors import DimensionMismatch, NonRealResidue, ResolventPole, TransmissionZero
from regforge.model.plant import discretize, neumann_eigenbasis

PI = math.pi
FREQS = (0.0, PI, 2 * PI)


@pytest.fixture
def heat(plant_cfg):
    sys = discretize(plant_cfg)
    return sys, design_K0(sys)


@pytest.fixture
def points(heat):
    sys, K0 = heat
    return compute_frequency_points(sys, K0, FREQS)


def transmission_zero_output(sys, K0) -> tuple[float, float]:
    """Output weights (c_a, c_b) that make P_K(0) vanish for the given K0."""
    A_K, _ = stabilized_matrices(sys, K0)
    g = np.linalg.solve(-A_K, sys.B[:, 0])
    return float(g[-1]), float(-g[0])


class TestRoutes:
    def test_scalar_hand_value(self):
        """A = −1, B = C = 1, K0 = 0 at ω = 1: y₀ = 1/(i + 1) = (1 − i)/2."""
        y0 = eval_PK_PKI_direct(scalar_system(), np.zeros((1, 1)), 1.0, 1.0, np.zeros(1))
        assert y0[0] == pytest.approx(0.5 - 0.5j, abs=1e-12)

    def test_full_matches_explicit_resolvent(self, heat):
        sys, K0 = heat
        A_K, C_K = stabilized_matrices(sys, K0)
        R = np.linalg.inv(1j * PI * np.eye(sys.n) - A_K)
        PK, PKI = eval_PK_PKI_full(sys, K0, PI)
        np.testing.assert_allclose(PKI, C_K @ R, rtol=1e-8, atol=1e-12)
        np.testing.assert_allclose(PK, C_K @ R @ sys.B + sys.D, rtol=1e-8)

    def test_direct_is_linear(self, heat):
        """y₀ = P_K u₀ + P_KI ψ₀."""
        sys, K0 = heat
        psi = np.random.default_rng(1).standard_normal(sys.n)
        PK, PKI = eval_PK_PKI_full(sys, K0, PI)
        y0 = eval_PK_PKI_direct(sys, K0, PI, 2.0, psi)
        np.testing.assert_allclose(y0, 2.0 * PK[:, 0] + PKI @ psi, rtol=1e-10)

    @pytest.mark.parametrize("omega", [PI, 2 * PI], ids=["pi", "two-pi"])
    def test_routes_agree(self, heat, omega):
        """Direct and reduced routes agree on P_K and on 10 random probes."""
        sys, K0 = heat
        probes = np.random.default_rng(0).standard_normal((sys.n, 10))
        pk_err, pki_err = compare_routes(sys, K0, omega, probes)
        assert pk_err <= 1e-9
        assert pki_err <= 1e-9

    def test_reduced_route_pole_at_zero(self, heat):
        """The pure Neumann plant has 0 in its spectrum; only the direct route works."""
        sys, K0 = heat
        with pytest.raises(ResolventPole):
            eval_PK_PKI_reduced(sys, K0, 0.0)
        PK, _ = eval_PK_PKI_full(sys, K0, 0.0)
        assert np.all(np.isfinite(PK))

    def test_conjugate_symmetry(self, heat):
        """P_K(−iω) is the conjugate of P_K(iω)."""
        sys, K0 = heat
        plus, _ = eval_PK_PKI_full(sys, K0, PI)
        minus, _ = eval_PK_PKI_full(sys, K0, -PI)
        np.testing.assert_allclose(minus, np.conj(plus), rtol=1e-12)

    def test_K0_shape_checked(self, heat):
        sys, _ = heat
        with pytest.raises(DimensionMismatch):
            eval_PK_PKI_full(sys, np.zeros((1, 3)), PI)

    def test_parallel_matches_serial(self, heat):
        sys, K0 = heat
        serial = compute_frequency_points(sys, K0, FREQS, workers=1)
        parallel = compute_frequency_points(sys, K0, FREQS, workers=3)
        for a, b in zip(serial, parallel):
            assert a.omega == b.omega
            np.testing.assert_array_equal(a.PK, b.PK)
            np.testing.assert_array_equal(a.PKI, b.PKI)


class TestAssembly:
    def test_scalar_block(self):
        """P_K(i) = (1 − i)/2 gives the real block [0.5; 0.5]."""
        (point,) = compute_frequency_points(scalar_system(), np.zeros((1, 1)), [1.0])
        np.testing.assert_allclose(build_B1([point]), [[0.5], [0.5]], atol=1e-12)

    def test_B1_from_HK(self, heat, points):
        """B1 = H_K·B + G2·D."""
        sys, _ = heat
        im = build_internal_model(FREQS, 1)
        fd = assemble_freq_data(points, im)
        np.testing.assert_allclose(fd.B1, fd.HK @ sys.B + im.G2 @ sys.D, rtol=1e-10, atol=1e-14)
        assert fd.B1.shape == (5, 1) and fd.HK.shape == (5, sys.n)

    def test_block_layout(self, points):
        """Rows are [P_K(0); Re P_K(iπ); −Im P_K(iπ); ...]."""
        B1 = build_B1(points)
        assert B1[0, 0] == pytest.approx(points[0].PK[0, 0].real)
        assert B1[1, 0] == pytest.approx(points[1].PK[0, 0].real)
        assert B1[2, 0] == pytest.approx(-points[1].PK[0, 0].imag)

    def test_non_conjugate_values_rejected(self):
        point = FrequencyPoint(
            omega=1.0,
            PK=np.array([[1.0 + 1.0j]]),
            PKI=np.zeros((1, 2), dtype=complex),
            PK_minus_value=np.array([[1.0 + 1.0j]]),
        )
        with pytest.raises(NonRealResidue):
            build_B1([point])

    def test_frequency_mismatch(self, points):
        with pytest.raises(DimensionMismatch):
            assemble_freq_data(points, build_internal_model([0.0, PI], 1))

    def test_sylvester_oracle(self, heat, points):
        """H_K from frequency data solves G1·H − H·A_K = G2·C_K."""
        sys, K0 = heat
        im = build_internal_model(FREQS, 1)
        HK = build_HK(points)
        assert sylvester_residual(HK, im.G1, im.G2, sys, K0) <= 1e-8
        reference = solve_HK_sylvester(im.G1, im.G2, sys, K0)
        assert np.linalg.norm(HK - reference) <= 1e-8 * np.linalg.norm(reference)


class TestTruncation:
    def test_error_nonincreasing(self, plant_cfg, heat):
        """‖H_K^N − H_K‖ in the weighted norm shrinks as N grows; N = n recovers H_K."""
        sys, K0 = heat
        HK = build_HK(compute_frequency_points(sys, K0, FREQS))
        scale = 1.0 / np.sqrt(sys.weights)[None, :]
        errors = []
        for N in (5, 10, 20, 50):
            HK_N = build_HK_truncated(sys, K0, FREQS, neumann_eigenbasis(plant_cfg, N))
            errors.append(float(np.linalg.norm((HK_N - HK) * scale)))
        for coarse, fine in zip(errors, errors[1:]):
            assert fine <= coarse + 1e-10
        assert errors[-1] <= 1e-8 * np.linalg.norm(HK * scale)

    def test_empty_basis(self, plant_cfg, heat):
        sys, K0 = heat
        HK_0 = build_HK_truncated(sys, K0, FREQS, neumann_eigenbasis(plant_cfg, 0))
        np.testing.assert_array_equal(HK_0, np.zeros((5, sys.n)))


class TestTransmissionZeros:
    def test_heat_passes(self, points):
        report = check_transmission_zeros(points)
        assert report.passed
        assert set(report.margins) == set(FREQS)
        assert min(report.margins.values()) > report.threshold

    def test_engineered_zero_at_dc(self, plant_cfg, heat):
        """Output weights chosen so P_K(0) = 0 are rejected at ω = 0."""
        sys, K0 = heat
        cfg = plant_cfg.model_copy(update={"output_weight": transmission_zero_output(sys, K0)})
        tz_points = compute_frequency_points(discretize(cfg), K0, FREQS)
        with pytest.raises(TransmissionZero) as excinfo:
            check_transmission_zeros(tz_points)
        assert excinfo.value.frequencies == [0.0]

    def test_report_without_raising(self, plant_cfg, heat):
        sys, K0 = heat
        cfg = plant_cfg.model_copy(update={"output_weight": transmission_zero_output(sys, K0)})
        tz_points = compute_frequency_points(discretize(cfg), K0, FREQS)
        report = check_transmission_zeros(tz_points, raise_on_failure=False)
        assert not report.passed and report.failures == [0.0]

    def test_zero_breaks_internal_model_controllability(self, plant_cfg, heat):
        """With P_K(0) = 0 the pair (G1, B1) loses rank at λ = 0."""
        sys, K0 = heat
        cfg = plant_cfg.model_copy(update={"output_weight": transmission_zero_output(sys, K0)})
        tz_points = compute_frequency_points(discretize(cfg), K0, FREQS)
        im = build_internal_model(FREQS, 1)
        assert not hautus_controllable(im.G1, build_B1(tz_points))
        assert hautus_controllable(im.G1, build_B1(compute_frequency_points(sys, K0, FREQS)))

    def test_margin_equal_to_threshold_passes(self):
        """Only singular values strictly below the threshold fail."""
        points = [
            FrequencyPoint(omega=0.0, PK=np.array([[1.0]]), PKI=np.zeros((1, 1))),
            FrequencyPoint(omega=1.0, PK=np.array([[2.0**-20]]), PKI=np.zeros((1, 1))),
        ]
        report = check_transmission_zeros(points, rel_tol=2.0**-20)
        assert report.margins[1.0] == report.threshold == 2.0**-20
        assert report.passed

    def test_vanishing_values_fail(self):
        """All P_K zero: the threshold is 0 and the zero still counts."""
        point = FrequencyPoint(omega=0.0, PK=np.zeros((1, 1)), PKI=np.zeros((1, 1)))
        with pytest.raises(TransmissionZero):
            check_transmission_zeros([point])
