"""Grid, operator and boundary-closure tests: exactness on linear fields,
stencil composition, discrete integration by parts, stress/heat-flux values
and dissipation positivity."""

import numpy as np
import pytest

from thinlayer import fields
from thinlayer.fields import NG, Grid2D, Grid3D, interior


def ghosted_scalar_3d(grid, fn):
    x, y, z = grid.mesh(ghosts=NG)
    return fn(x, y, z)


def ghosted_scalar_2d(grid, fn):
    x, y = grid.mesh(ghosts=NG)
    return fn(x, y)


class TestGrids:
    def test_validation(self):
        with pytest.raises(ValueError):
            Grid2D(4, 16)
        with pytest.raises(ValueError):
            Grid2D(16, 16, lx=-1.0)
        with pytest.raises(ValueError):
            Grid3D(16, 16, 2, eps=0.5)
        with pytest.raises(ValueError):
            Grid3D(16, 16, 8, eps=0.0)
        with pytest.raises(ValueError):
            Grid3D(16, 16, 8, eps=1.5)

    def test_spacings_and_measures(self):
        g = Grid3D(10, 20, 5, eps=0.5, lx=2.0)
        assert g.hx == pytest.approx(0.2)
        assert g.hy == pytest.approx(0.05)
        assert g.hz == pytest.approx(0.2)
        assert g.cell_vol == pytest.approx(0.2 * 0.05 * 0.2)
        assert g.horizontal == Grid2D(10, 20, 2.0, 1.0)

    def test_centers_cover_unit_interval(self):
        g = Grid2D(8, 8)
        x, y = g.centers()
        assert x[0] == pytest.approx(0.5 / 8)
        assert x[-1] == pytest.approx(1.0 - 0.5 / 8)
        xg, _ = g.centers(ghosts=NG)
        assert len(xg) == 8 + 2 * NG
        assert xg[0] == pytest.approx(-(NG - 0.5) / 8)

    def test_new_field_shapes(self):
        g3 = Grid3D(8, 10, 4, eps=0.5)
        assert fields.new_field(g3).shape == (12, 14, 8)
        assert fields.new_field(g3, ncomp=3).shape == (3, 12, 14, 8)
        g2 = Grid2D(8, 10)
        assert fields.new_field(g2, ncomp=2).shape == (2, 12, 14)

    def test_interior_roundtrip(self):
        g = Grid2D(8, 8)
        f = fields.new_field(g)
        assert interior(f).shape == (8, 8)


class TestDerivatives:
    def test_exact_on_linear_2d(self):
        g = Grid2D(12, 16)
        f = ghosted_scalar_2d(g, lambda x, y: 2.0 * x + 3.0 * y)
        gx, gy = fields.grad_h(f, g)
        np.testing.assert_allclose(gx, 2.0, atol=1e-13)
        np.testing.assert_allclose(gy, 3.0, atol=1e-13)

    def test_exact_on_linear_3d(self):
        g = Grid3D(8, 8, 6, eps=0.5)
        f = ghosted_scalar_3d(g, lambda x, y, z: 2.0 * x + 3.0 * y + 4.0 * z)
        gx, gy, gz = fields.grad_eps(f, g)
        np.testing.assert_allclose(gx, 2.0, atol=1e-12)
        np.testing.assert_allclose(gy, 3.0, atol=1e-12)
        # vertical derivative is scaled by 1/eps
        np.testing.assert_allclose(gz, 8.0, atol=1e-12)

    def test_vertical_scaling(self):
        g = Grid3D(8, 8, 8, eps=0.5)
        f = ghosted_scalar_3d(g, lambda x, y, z: z)
        assert fields.grad_eps(f, g)[2].flat[0] == pytest.approx(2.0)

    def test_div_of_linear_field(self):
        g = Grid3D(8, 8, 6, eps=0.25)
        x, y, z = g.mesh(ghosts=NG)
        v = np.stack([x, 2.0 * y, z])
        np.testing.assert_allclose(fields.div_eps(v, g), 3.0 + 4.0, atol=1e-11)

    def test_second_order_convergence(self):
        errs = []
        for n in (16, 32):
            g = Grid2D(n, n)
            f = ghosted_scalar_2d(g, lambda x, y: np.sin(2 * np.pi * x) * np.cos(np.pi * y))
            gx = fields.grad_h(f, g)[0][1:-1, 1:-1]
            x, y = g.mesh()
            exact = 2 * np.pi * np.cos(2 * np.pi * x) * np.cos(np.pi * y)
            errs.append(np.max(np.abs(gx - exact)))
        order = np.log2(errs[0] / errs[1])
        assert 1.9 < order < 2.1

    def test_laplace_is_div_grad_composition(self):
        g = Grid3D(8, 8, 6, eps=0.3)
        rng = np.random.default_rng(7)
        f = rng.standard_normal((g.nx + 2 * NG, g.ny + 2 * NG, g.nz + 2 * NG))
        lap = fields.laplace_eps(f, g)
        comp = fields.div_eps(fields.grad_eps(f, g), g)
        np.testing.assert_array_equal(lap, comp)
        assert lap.shape == (g.nx, g.ny, g.nz)

    def test_laplace_h_composition(self):
        g = Grid2D(10, 10)
        rng = np.random.default_rng(8)
        f = rng.standard_normal((g.nx + 2 * NG, g.ny + 2 * NG))
        np.testing.assert_array_equal(
            fields.laplace_h(f, g), fields.div_h(fields.grad_h(f, g), g)
        )

    def test_laplace_quadratic(self):
        g = Grid3D(8, 8, 8, eps=0.5)
        f = ghosted_scalar_3d(g, lambda x, y, z: x**2 + y**2 + z**2)
        np.testing.assert_allclose(fields.laplace_eps(f, g), 2.0 + 2.0 + 2.0 / 0.25, rtol=1e-10)


class TestIntegrationByParts:
    def test_odd_vector_even_scalar_boundary_free(self):
        # sum f div_eps v + sum v . grad_eps f = 0 exactly when v carries
        # no-slip (odd) ghosts and f carries Neumann (even) ghosts
        g = Grid3D(10, 10, 6, eps=0.4)
        rng = np.random.default_rng(42)
        f = fields.new_field(g)
        v = fields.new_field(g, ncomp=3)
        interior(f)[...] = rng.standard_normal((g.nx, g.ny, g.nz))
        for c in range(3):
            interior(v[c])[...] = rng.standard_normal((g.nx, g.ny, g.nz))
        fields.apply_scalar_bc_3d(f)
        for c in range(3):
            fields.apply_scalar_bc_3d(v[c], even_lateral=False, even_vertical=False)
        s1 = np.sum(interior(f) * fields.div_eps(v, g)[1:-1, 1:-1, 1:-1])
        grad = fields.grad_eps(f, g)
        s2 = sum(np.sum(interior(v[c]) * grad[c][1:-1, 1:-1, 1:-1]) for c in range(3))
        scale = np.sum(np.abs(interior(f))) + 1.0
        assert abs(s1 + s2) / scale < 1e-13

    def test_2d_integration_by_parts(self):
        g = Grid2D(12, 12)
        rng = np.random.default_rng(3)
        f = fields.new_field(g)
        v = fields.new_field(g, ncomp=2)
        interior(f)[...] = rng.standard_normal((g.nx, g.ny))
        for c in range(2):
            interior(v[c])[...] = rng.standard_normal((g.nx, g.ny))
        fields.apply_scalar_bc_2d(f)
        fields.apply_velocity_bc_2d(v)
        grad = fields.grad_h(f, g)
        s1 = np.sum(interior(f) * fields.div_h(v, g)[1:-1, 1:-1])
        s2 = sum(np.sum(interior(v[c]) * grad[c][1:-1, 1:-1]) for c in range(2))
        assert abs(s1 + s2) / (np.sum(np.abs(interior(f))) + 1.0) < 1e-13


class TestStressAndHeatFlux:
    def test_uniaxial_strain_3d(self):
        g = Grid3D(8, 8, 6, eps=0.5)
        x, y, z = g.mesh(ghosts=NG)
        u = np.stack([x, np.zeros_like(x), np.zeros_like(x)])
        mu = np.ones((g.nx + 2, g.ny + 2, g.nz + 2))
        S = fields.stress_3d(mu, u, g)
        np.testing.assert_allclose(S[0, 0], 4.0 / 3.0, atol=1e-11)
        np.testing.assert_allclose(S[1, 1], -2.0 / 3.0, atol=1e-11)
        np.testing.assert_allclose(S[2, 2], -2.0 / 3.0, atol=1e-11)
        np.testing.assert_allclose(S[0, 1], 0.0, atol=1e-11)

    def test_rigid_rotation_stress_free(self):
        g = Grid3D(8, 8, 6, eps=0.5)
        x, y, z = g.mesh(ghosts=NG)
        u = np.stack([-y, x, np.zeros_like(x)])
        mu = np.ones((g.nx + 2, g.ny + 2, g.nz + 2))
        S = fields.stress_3d(mu, u, g)
        np.testing.assert_allclose(S, 0.0, atol=1e-11)

    def test_uniaxial_strain_2d(self):
        g = Grid2D(8, 8)
        x, y = g.mesh(ghosts=NG)
        V = np.stack([x, np.zeros_like(x)])
        mu = np.ones((g.nx + 2, g.ny + 2))
        S = fields.stress_2d(mu, V, g)
        np.testing.assert_allclose(S[0, 0], 4.0 / 3.0, atol=1e-11)
        np.testing.assert_allclose(S[1, 1], -2.0 / 3.0, atol=1e-11)

    def test_heat_flux_linear_profile(self):
        g = Grid3D(8, 8, 6, eps=0.5)
        th = ghosted_scalar_3d(g, lambda x, y, z: x)
        kappa = np.ones((g.nx + 2, g.ny + 2, g.nz + 2))
        q = fields.heat_flux_3d(kappa, th, g)
        np.testing.assert_allclose(q[0], -1.0, atol=1e-11)
        np.testing.assert_allclose(q[1], 0.0, atol=1e-11)
        np.testing.assert_allclose(q[2], 0.0, atol=1e-11)

    def test_fourier_dissipation_sign(self):
        g = Grid3D(8, 8, 6, eps=0.5)
        rng = np.random.default_rng(11)
        th = rng.standard_normal((g.nx + 2 * NG, g.ny + 2 * NG, g.nz + 2 * NG))
        kappa = np.ones((g.nx + 2, g.ny + 2, g.nz + 2))
        q = fields.heat_flux_3d(kappa, th, g)
        grad = fields.grad_eps(th, g)
        assert np.max(np.einsum("i...,i...->...", q, grad)) <= 0.0

    def test_stress_contraction_pointwise_nonnegative(self):
        g = Grid3D(8, 8, 6, eps=0.5)
        rng = np.random.default_rng(5)
        u = rng.standard_normal((3, g.nx + 2 * NG, g.ny + 2 * NG, g.nz + 2 * NG))
        mu = 0.5 + rng.random((g.nx + 2, g.ny + 2, g.nz + 2))
        assert np.min(fields.stress_contraction_3d(mu, u, g)) > -1e-12

    def test_stress_contraction_positive_for_sheared_field(self):
        g = Grid2D(8, 8)
        x, y = g.mesh(ghosts=NG)
        V = np.stack([y, np.zeros_like(y)])
        mu = np.ones((g.nx + 2, g.ny + 2))
        np.testing.assert_allclose(fields.stress_contraction_2d(mu, V, g), 1.0, atol=1e-11)


class TestBoundaryClosure:
    def test_even_ghosts_give_zero_normal_flux(self):
        g = Grid2D(8, 8)
        rng = np.random.default_rng(1)
        f = fields.new_field(g)
        interior(f)[...] = rng.standard_normal((8, 8))
        fields.apply_scalar_bc_2d(f)
        # one-sided difference across every wall face vanishes identically
        np.testing.assert_array_equal(f[NG - 1, NG:-NG], f[NG, NG:-NG])
        np.testing.assert_array_equal(f[-NG, NG:-NG], f[-NG - 1, NG:-NG])
        np.testing.assert_array_equal(f[NG:-NG, NG - 1], f[NG:-NG, NG])

    def test_odd_ghosts_give_zero_wall_value(self):
        g = Grid2D(8, 8)
        rng = np.random.default_rng(2)
        V = fields.new_field(g, ncomp=2)
        for c in range(2):
            interior(V[c])[...] = rng.standard_normal((8, 8))
        fields.apply_velocity_bc_2d(V)
        for c in range(2):
            face = 0.5 * (V[c][NG - 1, NG:-NG] + V[c][NG, NG:-NG])
            np.testing.assert_allclose(face, 0.0, atol=1e-15)

    def test_slip_top_bottom_3d(self):
        g = Grid3D(8, 8, 6, eps=0.5)
        rng = np.random.default_rng(4)
        u = fields.new_field(g, ncomp=3)
        for c in range(3):
            interior(u[c])[...] = rng.standard_normal((8, 8, 6))
        fields.apply_velocity_bc_3d(u)
        # horizontal components mirror evenly across top/bottom (free slip)
        np.testing.assert_array_equal(u[0][NG:-NG, NG:-NG, NG - 1], u[0][NG:-NG, NG:-NG, NG])
        # vertical component vanishes on the faces (impermeability)
        face = 0.5 * (u[2][NG:-NG, NG:-NG, NG - 1] + u[2][NG:-NG, NG:-NG, NG])
        np.testing.assert_allclose(face, 0.0, atol=1e-15)
        # lateral walls are no-slip for every component
        for c in range(3):
            face = 0.5 * (u[c][NG - 1, NG:-NG, NG:-NG] + u[c][NG, NG:-NG, NG:-NG])
            np.testing.assert_allclose(face, 0.0, atol=1e-15)

    def test_two_ghost_rings_filled(self):
        g = Grid2D(8, 8)
        f = fields.new_field(g)
        interior(f)[...] = 3.0
        fields.apply_scalar_bc_2d(f)
        assert f[0, NG] == 3.0 and f[1, NG] == 3.0

    def test_check_finite(self):
        a = np.zeros(4)
        fields.check_finite(a, where="ok")
        a[2] = np.nan
        with pytest.raises(FloatingPointError):
            fields.check_finite(a, where="bad")
        b = np.zeros(3)
        b[0] = np.inf
        with pytest.raises(FloatingPointError):
            fields.check_finite(np.zeros(2), b)
