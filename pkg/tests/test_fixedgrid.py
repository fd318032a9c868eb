"""Tests for the front-fixing transform and finite-volume operators."""

import numpy as np
import pytest

from ischemic_fbp.errors import InvalidGeometry, NonDiffusingField, NonFiniteInput
from ischemic_fbp.fixedgrid import (
    BoundaryFlux,
    advection_flux,
    advection_taxis_operator,
    boundary_closure_outer,
    boundary_closure_wound,
    boundary_fluxes,
    build_grid,
    diffusion_operator,
    outer_robin_residual,
    rho_transport_rate,
    transform_coeffs,
    wound_gradient,
)
from ischemic_fbp.mechanics import VelocityProfile, compute_velocity
from ischemic_fbp.schema import FieldId, Parameters

R0 = 8.0 / 3.0
L = 5.0


def _rest_coeffs(grid, params):
    return transform_coeffs(grid, VelocityProfile.at_rest(grid.N), params)


def _moving_coeffs(n, params, seed=0):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(1.0, 1.8, n)
    grid = build_grid(n, R0, L)
    velocity = compute_velocity(rho, R0, params)
    return grid, transform_coeffs(grid, velocity, params)


class TestGrid:
    """Tests for the xi grid."""

    def test_mapping(self):
        """Test r(xi) = (1 - xi) R + xi L."""
        grid = build_grid(8, 1.0, 5.0)
        assert grid.to_r(0.5) == pytest.approx(3.0)
        grid = build_grid(8, R0, L)
        assert grid.to_r(0.25) == pytest.approx(3.25)

    def test_end_faces_exact(self):
        """Test r(0) = R and r(1) = L exactly."""
        grid = build_grid(37, R0, L)
        assert grid.r_faces[0] == R0
        assert grid.r_faces[-1] == L
        assert len(grid.r_faces) == 38
        assert grid.dxi == pytest.approx(1.0 / 37)

    @pytest.mark.parametrize("R", [0.0, -1.0, 5.0, 6.0])
    def test_invalid_radius(self, R):
        """Test R outside (0, L) raises InvalidGeometry."""
        with pytest.raises(InvalidGeometry):
            build_grid(16, R, L)

    def test_too_few_cells(self):
        """Test fewer than eight cells are rejected."""
        with pytest.raises(ValueError):
            build_grid(4, R0, L)


class TestTransformCoeffs:
    """Tests for the dilation and comoving advection coefficients."""

    def test_dilation_reference_values(self, default_params):
        """Test K at the end cells for R = 1, L = 5 and Rdot = -1."""
        grid = build_grid(8, 1.0, 5.0)
        v_faces = np.zeros(9)
        v_faces[0] = -1.0
        velocity = VelocityProfile(
            v_faces=v_faces, v_centers=np.zeros(8), vr_centers=np.zeros(8), Q=0.0, Rdot=-1.0
        )
        coeffs = transform_coeffs(grid, velocity, default_params)
        # centers xi = 1/16 (r = 1.25) and xi = 15/16 (r = 4.75)
        assert coeffs.K_centers[0] == pytest.approx(-0.5)
        assert coeffs.K_centers[-1] == pytest.approx(-0.25 * (0.25 / 4.75 - 1.0))

    def test_comoving_speed_vanishes_at_ends(self, default_params):
        """Test M = 0 at xi = 0 and xi = 1."""
        _, coeffs = _moving_coeffs(32, default_params)
        assert coeffs.M_faces[0] == pytest.approx(0.0, abs=1e-12)
        assert coeffs.M_faces[-1] == pytest.approx(0.0, abs=1e-12)

    def test_at_rest(self, default_params):
        """Test K and M vanish for a motionless matrix."""
        coeffs = _rest_coeffs(build_grid(16, R0, L), default_params)
        assert np.all(coeffs.K_centers == 0.0)
        assert np.all(coeffs.M_faces == 0.0)
        assert coeffs.D_tilde[FieldId.W] == pytest.approx(0.5 / (L - R0) ** 2)


class TestDiffusionOperator:
    """Tests for the conservative diffusion operator."""

    def test_constant_field(self, default_params):
        """Test a constant field with zero-flux ends does not diffuse."""
        grid = build_grid(24, R0, L)
        coeffs = _rest_coeffs(grid, default_params)
        rate = diffusion_operator(np.full(24, 3.0), FieldId.W, coeffs, grid)
        np.testing.assert_allclose(rate, 0.0, atol=1e-12)

    def test_quadratic_in_xi(self, default_params):
        """Test the interior rate for u = xi^2 matches the radial Laplacian."""
        grid = build_grid(32, R0, L)
        coeffs = _rest_coeffs(grid, default_params)
        d = coeffs.D_tilde[FieldId.W]
        xi, r = grid.xi_centers, grid.r_centers
        rate = diffusion_operator(xi**2, FieldId.W, coeffs, grid)
        expected = d * (2.0 + 2.0 * xi * grid.width / r)
        np.testing.assert_allclose(rate[1:-1], expected[1:-1], rtol=1e-9)

    def test_quadratic_in_r(self, default_params):
        """Test u = r^2 gives the rate 4 D away from the ends."""
        grid = build_grid(32, R0, L)
        coeffs = _rest_coeffs(grid, default_params)
        rate = diffusion_operator(grid.r_centers**2, FieldId.P, coeffs, grid)
        np.testing.assert_allclose(rate[1:-1], 4.0 * default_params.D_p, rtol=1e-9)

    def test_flux_telescopes(self, default_params):
        """Test the weighted sum of rates equals the boundary fluxes."""
        grid = build_grid(20, R0, L)
        coeffs = _rest_coeffs(grid, default_params)
        u = np.random.default_rng(2).uniform(0.0, 2.0, 20)
        inner = BoundaryFlux(offset=0.3)
        outer = BoundaryFlux(coeff=0.7, offset=-0.1)
        rate = diffusion_operator(u, FieldId.E, coeffs, grid, inner, outer)
        total = float(np.sum(grid.r_centers * rate) * grid.dxi)
        expected = grid.r_faces[0] * inner.flux(u[0]) - grid.r_faces[-1] * outer.flux(u[-1])
        assert total == pytest.approx(expected, rel=1e-10, abs=1e-12)

    def test_rho_does_not_diffuse(self, default_params):
        """Test requesting rho diffusion raises NonDiffusingField."""
        grid = build_grid(16, R0, L)
        coeffs = _rest_coeffs(grid, default_params)
        with pytest.raises(NonDiffusingField):
            diffusion_operator(np.ones(16), FieldId.RHO, coeffs, grid)


class TestOuterClosure:
    """Tests for the ischemic outer boundary condition."""

    def _setup(self, gamma):
        params = Parameters(gamma=gamma)
        grid = build_grid(16, R0, L)
        return params, grid, _rest_coeffs(grid, params)

    def test_dirichlet_when_healthy(self):
        """Test gamma = 0 pins the face value to the rest value."""
        params, grid, coeffs = self._setup(0.0)
        closure = boundary_closure_outer(0.37, FieldId.W, 0.0, grid, coeffs, params)
        assert closure.value == pytest.approx(1.0)
        closure = boundary_closure_outer(0.37, FieldId.P, 0.0, grid, coeffs, params)
        assert closure.value == pytest.approx(0.0)

    def test_zero_total_flux_when_ischemic(self):
        """Test gamma = 1 makes diffusion cancel the taxis flux."""
        params, grid, coeffs = self._setup(1.0)
        J = 0.02
        closure = boundary_closure_outer(0.4, FieldId.M, 1.0, grid, coeffs, params, taxis_flux=J)
        assert closure.flux(0.4) + J / grid.width == pytest.approx(0.0, abs=1e-12)

    def test_no_flux_without_taxis_when_ischemic(self):
        """Test gamma = 1 without taxis gives zero diffusive flux."""
        params, grid, coeffs = self._setup(1.0)
        closure = boundary_closure_outer(0.8, FieldId.W, 1.0, grid, coeffs, params)
        assert closure.flux(0.8) == pytest.approx(0.0, abs=1e-12)

    def test_mixed_condition_at_rest_value(self):
        """Test gamma = 0.5 leaves u = u* with zero gradient."""
        params, grid, coeffs = self._setup(0.5)
        closure = boundary_closure_outer(1.0, FieldId.F, 0.5, grid, coeffs, params)
        assert closure.value == pytest.approx(1.0)
        assert closure.flux(1.0) == pytest.approx(0.0, abs=1e-12)

    def test_rho_has_no_closure(self):
        """Test rho raises NonDiffusingField."""
        params, grid, coeffs = self._setup(0.5)
        with pytest.raises(NonDiffusingField):
            boundary_closure_outer(1.0, FieldId.RHO, 0.5, grid, coeffs, params)


def _rest_fields(n):
    fields = np.zeros((8, n))
    for fid in (FieldId.W, FieldId.F, FieldId.B, FieldId.RHO):
        fields[fid] = 1.0
    return fields


class TestOuterRobinResidual:
    """Tests for the Robin residual measured on the outer cells."""

    @pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0])
    def test_rest_state(self, gamma):
        """Test uniform healthy tissue satisfies every outer condition."""
        params = Parameters(gamma=gamma)
        grid = build_grid(16, R0, L)
        assert outer_robin_residual(_rest_fields(16), grid, gamma, params) == 0.0

    def test_healthy_offset(self, default_params):
        """Test gamma = 0 reports the outer-cell offset from the rest value."""
        grid = build_grid(16, R0, L)
        fields = _rest_fields(16)
        fields[FieldId.P, -1] = 0.2
        assert outer_robin_residual(fields, grid, 0.0, default_params) == pytest.approx(0.2)

    def test_ischemic_gradient(self):
        """Test gamma = 1 reports L times the two-cell gradient."""
        params = Parameters(gamma=1.0)
        grid = build_grid(16, R0, L)
        fields = _rest_fields(16)
        fields[FieldId.W] = 1.0 + 0.01 * (grid.r_centers - L)
        assert outer_robin_residual(fields, grid, 1.0, params) == pytest.approx(L * 0.01)

    def test_taxis_flux_enters(self):
        """Test the taxis flux is subtracted from the gradient."""
        params = Parameters(gamma=1.0)
        grid = build_grid(16, R0, L)
        J = 0.01
        residual = outer_robin_residual(_rest_fields(16), grid, 1.0, params, {FieldId.M: J})
        assert residual == pytest.approx(L * J / params.D_m)


class TestWoundClosure:
    """Tests for the wound-edge conditions."""

    def test_pdgf_inflow(self, default_params):
        """Test dp/dr = -k_pb / D_p at R = R0."""
        assert wound_gradient(FieldId.P, R0, default_params) == pytest.approx(-1.0)
        grid = build_grid(16, R0, L)
        closure = boundary_closure_wound(FieldId.P, R0, grid, default_params)
        assert closure.offset == pytest.approx(1.0 / grid.width)

    def test_no_flux_fields(self, default_params):
        """Test w, e, n, b carry no flux."""
        grid = build_grid(16, R0, L)
        for fid in (FieldId.W, FieldId.E, FieldId.N, FieldId.B):
            assert boundary_closure_wound(fid, R0, grid, default_params).flux(0.7) == 0.0

    def test_zero_total_flux_for_cells(self, default_params):
        """Test m and f diffusion cancels their taxis flux."""
        grid = build_grid(16, R0, L)
        closure = boundary_closure_wound(FieldId.M, R0, grid, default_params, taxis_flux=0.05)
        assert closure.offset + 0.05 / grid.width == pytest.approx(0.0)

    def test_invalid_radius(self, default_params):
        """Test R <= 0 raises InvalidGeometry."""
        grid = build_grid(16, R0, L)
        with pytest.raises(InvalidGeometry):
            boundary_closure_wound(FieldId.P, 0.0, grid, default_params)


class TestTransport:
    """Tests for advection, taxis and the matrix update."""

    def test_zero_fields_have_zero_transport(self, default_params):
        """Test the transport rates of an empty state vanish."""
        grid, coeffs = _moving_coeffs(16, default_params)
        fields = np.zeros((8, 16))
        closures = boundary_fluxes(fields, R0, grid, coeffs, default_params)
        np.testing.assert_allclose(advection_taxis_operator(fields, coeffs, grid, closures), 0.0)

    def test_uniform_pdgf_gives_no_cell_taxis(self):
        """Test a flat PDGF with no wound source drives no m or f flux."""
        params = Parameters(gamma=1.0, k_pb=0.0)
        grid = build_grid(16, R0, L)
        coeffs = _rest_coeffs(grid, params)
        fields = np.ones((8, 16))
        fields[FieldId.E] = 0.0
        closures = boundary_fluxes(fields, R0, grid, coeffs, params)
        np.testing.assert_allclose(closures.taxis[FieldId.M], 0.0, atol=1e-15)
        np.testing.assert_allclose(closures.taxis[FieldId.F], 0.0, atol=1e-15)

    def test_advection_conserves_content(self, default_params):
        """Test the weighted sum of the advective divergence is zero."""
        grid, coeffs = _moving_coeffs(32, default_params, seed=4)
        rho = np.random.default_rng(9).uniform(0.5, 1.5, 32)
        rate = rho_transport_rate(rho, coeffs, grid) + coeffs.K_centers * rho
        assert float(np.sum(grid.r_centers * rate)) == pytest.approx(0.0, abs=1e-10)

    def test_advection_flux_closed_ends(self, default_params):
        """Test no advective flux through xi = 0 or xi = 1."""
        _, coeffs = _moving_coeffs(16, default_params)
        flux = advection_flux(np.ones(16), coeffs)
        assert flux[0] == 0.0
        assert flux[-1] == 0.0

    def test_dense_matrix_decompresses(self, default_params):
        """Test rho just below rho_m decreases everywhere when Q > 0."""
        grid = build_grid(64, R0, L)
        rho = np.full(64, default_params.rho_m - 0.01)
        velocity = compute_velocity(rho, R0, default_params)
        assert velocity.Q > 0.0
        coeffs = transform_coeffs(grid, velocity, default_params)
        reaction = default_params.k_rho * 0.8 * (1.0 - rho / default_params.rho_m) - default_params.lambda_rho * rho
        rate = rho_transport_rate(rho, coeffs, grid, reaction)
        assert np.all(rate < 0.0)

    def test_non_finite_rho(self, default_params):
        """Test NaN density raises NonFiniteInput."""
        grid = build_grid(16, R0, L)
        coeffs = _rest_coeffs(grid, default_params)
        rho = np.ones(16)
        rho[0] = np.inf
        with pytest.raises(NonFiniteInput):
            rho_transport_rate(rho, coeffs, grid)
