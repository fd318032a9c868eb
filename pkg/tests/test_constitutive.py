"""Tests for constitutive functions, kinetics and initial profiles."""

import math

import numpy as np
import pytest

from ischemic_fbp.constitutive import (
    DEFAULT_KINETICS,
    bounded_taxis,
    heaviside_smooth,
    initial_b_profile,
    initial_p_profile,
    kinetics,
    lemma_tip_bound,
    oxygen_response,
    pressure,
    resolve_parameters,
    validate_homeostasis,
)
from ischemic_fbp.errors import NonFiniteInput
from ischemic_fbp.schema import FieldId, Parameters


class TestHeavisideSmooth:
    """Tests for the smoothed Heaviside."""

    def test_zero_for_negative_argument(self):
        """Test H vanishes for u < 0."""
        assert heaviside_smooth(-3.0) == 0.0
        assert heaviside_smooth(0.0) == 0.0

    def test_half_at_threshold(self):
        """Test H(0.1) is one half since 0.1^6 = 1e-6."""
        assert heaviside_smooth(0.1) == pytest.approx(0.5, rel=1e-12)

    def test_monotone_and_below_one(self):
        """Test H is nondecreasing and stays below 1."""
        u = np.linspace(-1.0, 5.0, 601)
        h = heaviside_smooth(u)
        assert np.all(np.diff(h) >= 0.0)
        assert np.all(h < 1.0)
        assert np.all(h >= 0.0)


class TestPressure:
    """Tests for the matrix pressure."""

    def test_zero_below_rest_density(self):
        """Test no pressure for rho <= 1."""
        assert pressure(0.3, 10.0) == 0.0
        assert pressure(1.0, 10.0) == 0.0

    def test_linear_above_rest_density(self):
        """Test P = beta (rho - 1) above 1."""
        assert pressure(1.5, 10.0) == pytest.approx(5.0)

    def test_array_shape_preserved(self):
        """Test arrays keep their shape."""
        out = pressure(np.array([0.5, 1.2, 2.0]), 10.0)
        np.testing.assert_allclose(out, [0.0, 2.0, 10.0])


class TestOxygenResponse:
    """Tests for the oxygen production factors."""

    def test_values_at_half(self, default_params):
        """Test G_p and G_e at w = 0.5."""
        g_p, g_e, _, _, _ = oxygen_response(0.5, default_params)
        assert g_p == pytest.approx(1.5)
        assert g_e == pytest.approx(1.0)

    def test_saturated_values(self, default_params):
        """Test G_p = 2 and G_e = 1 from w = 4 upwards."""
        for w in (4.0, 7.5):
            g_p, g_e, _, _, _ = oxygen_response(w, default_params)
            assert g_p == 2.0
            assert g_e == 1.0

    def test_michaelis_factors_at_one(self, default_params):
        """Test G_f = G_b = 1 at w = 1."""
        _, _, g_f, g_b, _ = oxygen_response(1.0, default_params)
        assert g_f == pytest.approx(1.0)
        assert g_b == pytest.approx(1.0)

    def test_death_factor_near_zero_in_healthy_range(self, default_params):
        """Test D(1) is of order 1e-5."""
        _, _, _, _, death = oxygen_response(1.0, default_params)
        assert death == pytest.approx(1.14e-5, rel=0.01)

    def test_death_factor_one_without_oxygen(self, default_params):
        """Test D(0) = 1."""
        _, _, _, _, death = oxygen_response(0.0, default_params)
        assert death == 1.0

    @pytest.mark.parametrize("breakpoint", [0.5, 1.0, 4.0])
    def test_piecewise_factors_continuous(self, default_params, breakpoint):
        """Test G_p and G_e join continuously at the breakpoints."""
        left = oxygen_response(breakpoint - 1e-14, default_params)
        right = oxygen_response(breakpoint, default_params)
        assert abs(left[0] - right[0]) < 1e-12
        assert abs(left[1] - right[1]) < 1e-12


class TestBoundedTaxis:
    """Tests for the attenuated gradient."""

    def test_reference_value(self):
        """Test bt(4) = 4 / sqrt(2) for k_sg = 1/16."""
        assert bounded_taxis(4.0, 0.0625) == pytest.approx(4.0 / math.sqrt(2.0))

    def test_odd(self):
        """Test bt(-s) = -bt(s)."""
        s = np.linspace(-20.0, 20.0, 41)
        np.testing.assert_allclose(bounded_taxis(-s, 0.0625), -bounded_taxis(s, 0.0625))

    def test_bounded(self):
        """Test |bt| stays below 1/sqrt(k_sg)."""
        assert abs(bounded_taxis(1e6, 0.0625)) < 4.0

    def test_identity_without_attenuation(self):
        """Test k_sg = 0 returns the slope unchanged."""
        assert bounded_taxis(3.7, 0.0) == pytest.approx(3.7)


class TestKinetics:
    """Tests for the reaction rates."""

    def test_homeostatic_state_is_equilibrium(self, healthy_fields):
        """Test all rates vanish at the healthy state with enforced constraints."""
        params = resolve_parameters(Parameters(k_pb=0.0, enforce_homeostasis=True))
        rates = kinetics(healthy_fields, 0.0, params)
        assert np.max(np.abs(rates)) <= 1e-4

    def test_no_oxygen_source_at_extreme_ischemia(self, default_params):
        """Test R_w = 0 when w = 0 and gamma = 1."""
        fields = np.array([0.0, 0.3, 0.2, 0.5, 1.0, 0.4, 0.8, 1.2])
        rates = kinetics(fields, 1.0, default_params)
        assert rates[FieldId.W] == 0.0

    def test_tip_supersolution(self, default_params):
        """Test the tip rate plus the pressure term is nonpositive at n = N."""
        n_cap = lemma_tip_bound(default_params)
        beta, rho_m = default_params.beta, default_params.rho_m
        for b in (0.0, 0.5, 1.0):
            for e in (0.0, 1.0, 100.0):
                fields = np.array([1.0, 0.0, e, 0.0, 1.0, n_cap, b, 1.0])
                rate = kinetics(fields, 0.0, default_params)[FieldId.N]
                assert rate + n_cap * beta * (rho_m - 1.0) <= 1e-12

    def test_grid_shape(self, default_params):
        """Test rates keep the (8, N) shape."""
        fields = np.ones((8, 12))
        assert kinetics(fields, 0.5, default_params).shape == (8, 12)

    def test_rejects_non_finite(self, default_params, healthy_fields):
        """Test NaN input raises NonFiniteInput."""
        fields = healthy_fields.copy()
        fields[FieldId.P] = math.nan
        with pytest.raises(NonFiniteInput):
            kinetics(fields, 0.0, default_params)

    def test_rejects_wrong_field_count(self, default_params):
        """Test the leading axis must hold eight fields."""
        with pytest.raises(ValueError):
            kinetics(np.ones(7), 0.0, default_params)

    def test_reconstructed_inventory(self):
        """Test the placeholder kinetics are flagged."""
        assert set(DEFAULT_KINETICS.reconstructed) == {"p", "e", "m", "b"}


class TestHomeostasis:
    """Tests for the homeostasis constraints."""

    def test_default_verdicts(self, default_params):
        """Test k_w and k_f pass while lambda_rho is flagged."""
        checks = {c.parameter: c for c in validate_homeostasis(default_params)}
        assert checks["k_w"].verdict == "pass"
        assert checks["k_f"].verdict == "pass"
        assert checks["lambda_rho"].verdict == "warn"
        assert checks["lambda_rho"].implied == pytest.approx(0.125)
        assert checks["k_w"].implied == pytest.approx(4.387)
        assert checks["k_f"].implied == pytest.approx(5.2e-3 / 0.9)

    def test_listed_values_untouched(self, default_params):
        """Test validation never changes the parameters."""
        validate_homeostasis(default_params)
        assert default_params.lambda_rho == 0.1

    def test_resolve_applies_implied_values(self):
        """Test enforce_homeostasis replaces the three rates."""
        resolved = resolve_parameters(Parameters(enforce_homeostasis=True))
        assert resolved.lambda_rho == pytest.approx(0.125)
        assert resolved.k_w == pytest.approx(4.387)

    def test_resolve_is_noop_by_default(self, default_params):
        """Test parameters pass through when not enforcing."""
        assert resolve_parameters(default_params) is default_params


class TestInitialProfiles:
    """Tests for the initial sprout and PDGF profiles."""

    def test_b_profile_values(self, default_params):
        """Test g at its breakpoints."""
        R0, eps0 = default_params.R0, default_params.eps0
        r = R0 + eps0 * np.array([0.0, 0.25, 0.75, 1.0, 2.0])
        np.testing.assert_allclose(
            initial_b_profile(r, default_params), [0.0, 1.0 / 6.0, 5.0 / 6.0, 1.0, 1.0], atol=1e-12
        )

    def test_b_profile_monotone(self, default_params):
        """Test g is nondecreasing in r."""
        r = np.linspace(default_params.R0, default_params.L, 500)
        assert np.all(np.diff(initial_b_profile(r, default_params)) >= -1e-15)

    def test_p_profile_edge_value(self, default_params):
        """Test p0(R0) = k_pb eps0 / (4 D_p)."""
        assert initial_p_profile(default_params.R0, default_params) == pytest.approx(0.125)

    def test_p_profile_edge_slope(self, default_params):
        """Test dp0/dr = -k_pb / D_p at the wound edge."""
        h = 1e-7
        R0 = default_params.R0
        slope = (initial_p_profile(R0 + h, default_params) - initial_p_profile(R0, default_params)) / h
        assert slope == pytest.approx(-1.0, rel=1e-5)

    def test_p_profile_vanishes_outside_layer(self, default_params):
        """Test p0 = 0 beyond R0 + eps0."""
        r = default_params.R0 + default_params.eps0 + np.array([0.0, 0.3, 1.0])
        np.testing.assert_allclose(initial_p_profile(r, default_params), 0.0, atol=1e-15)


class TestTipBound:
    """Tests for the tip density bound."""

    def test_default_value(self, default_params):
        """Test the bound is n_m = 10 for the defaults."""
        assert lemma_tip_bound(default_params) == pytest.approx(10.0)
