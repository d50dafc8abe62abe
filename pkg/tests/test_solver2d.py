"""Planar-solver tests: invariances, source orientation, the primitive
tendency conversion and a quick manufactured-solution convergence check."""

import numpy as np
import pytest

from thinlayer import solver2d, thermo
from thinlayer.fields import Grid2D, interior
from thinlayer.gravity import GravityConfig

from mms_helpers import mms_error_2d


def make_bumpy_state(grid, amp=0.2):
    s = solver2d.State2D.uniform(grid, r=1.0, Theta=1.0)
    x, y = grid.mesh()
    interior(s.r)[...] = 1.0 + amp * np.sin(np.pi * x) * np.sin(np.pi * y)
    interior(s.Theta)[...] = 1.0 + amp * np.cos(np.pi * x) * np.cos(np.pi * y)
    interior(s.V[0])[...] = amp * np.sin(np.pi * x) * np.sin(np.pi * y)
    solver2d.apply_bc(s)
    return s


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            solver2d.SolverConfig2D(cfl=-0.1)
        with pytest.raises(ValueError):
            solver2d.SolverConfig2D(t_end=0.0)


class TestUniformState:
    def test_rhs_vanishes(self):
        grid = Grid2D(10, 10)
        s = solver2d.State2D.uniform(grid, r=1.1, Theta=0.8)
        tend = solver2d.rhs(s, grid, solver2d.SolverConfig2D())
        for t in tend:
            assert np.max(np.abs(t)) < 1e-12

    def test_step_is_fixed_point(self):
        grid = Grid2D(10, 10)
        s = solver2d.State2D.uniform(grid, r=1.1, Theta=0.8)
        sim = solver2d.Simulation2D(grid, solver2d.SolverConfig2D(), s)
        sim.step()
        np.testing.assert_allclose(interior(s.r), 1.1, rtol=1e-13)
        np.testing.assert_allclose(interior(s.Theta), 0.8, rtol=1e-12)
        np.testing.assert_allclose(interior(s.V), 0.0, atol=1e-13)


class TestConservation:
    def test_mass_conserved_to_roundoff(self):
        grid = Grid2D(16, 16)
        s = make_bumpy_state(grid)
        sim = solver2d.Simulation2D(grid, solver2d.SolverConfig2D(), s)
        m0 = sim.diagnostics()["mass"]
        for _ in range(30):
            sim.step()
        m1 = sim.diagnostics()["mass"]
        assert abs(m1 - m0) / m0 < 1e-13

    def test_diagnostics_keys(self):
        grid = Grid2D(10, 10)
        sim = solver2d.Simulation2D(grid, solver2d.SolverConfig2D(),
                                    make_bumpy_state(grid))
        d = sim.diagnostics()
        for key in ("time", "mass", "energy", "total_entropy", "momentum_residual"):
            assert key in d
            assert np.isfinite(d[key])


class TestSourceTerms:
    def test_coriolis_orientation(self):
        grid = Grid2D(16, 16)
        chi = 0.6
        s = solver2d.State2D.uniform(grid)
        s.V[0][...] = 1.0
        cfg = solver2d.SolverConfig2D(gravity=GravityConfig(alpha=1, beta=0.5, chi=chi))
        tend = solver2d.rhs(s, grid, cfg)  # no gphi: rotation sources only
        xs, ys = grid.centers()
        i = j = 8
        assert tend[1][i, j] == pytest.approx(2.0 * chi**2 * xs[i], abs=1e-10)
        assert tend[2][i, j] == pytest.approx(-chi + 2.0 * chi**2 * ys[j], abs=1e-10)

    def test_gravity_gradient_forcing(self):
        grid = Grid2D(10, 10)
        s = solver2d.State2D.uniform(grid, r=2.0)
        gphi = np.zeros((2, 10, 10))
        gphi[0] = 0.3
        tend = solver2d.rhs(s, grid, solver2d.SolverConfig2D(), gphi=gphi)
        np.testing.assert_allclose(tend[1], 0.6, atol=1e-11)

    def test_primitive_tendencies_uniform_with_gravity(self):
        # uniform state: the only tendency is d_t V = gphi
        grid = Grid2D(10, 10)
        s = solver2d.State2D.uniform(grid, r=1.7, Theta=1.2)
        gphi = np.zeros((2, 10, 10))
        gphi[0] = 0.25
        gphi[1] = -0.5
        dt_r, dt_V, dt_Theta = solver2d.primitive_tendencies(
            s, grid, solver2d.SolverConfig2D(), gphi=gphi
        )
        np.testing.assert_allclose(dt_r, 0.0, atol=1e-12)
        np.testing.assert_allclose(dt_V[0], 0.25, atol=1e-11)
        np.testing.assert_allclose(dt_V[1], -0.5, atol=1e-11)
        np.testing.assert_allclose(dt_Theta, 0.0, atol=1e-11)

    def test_primitive_tendencies_chain_rule(self):
        # the conversion satisfies the conserved-variable chain rule exactly
        grid = Grid2D(12, 12)
        s = make_bumpy_state(grid)
        cfg = solver2d.SolverConfig2D()
        t = solver2d.rhs(s, grid, cfg)
        dt_r, dt_V, dt_Theta = solver2d.primitive_tendencies(s, grid, cfg)
        ri = interior(s.r)
        Vi = [interior(s.V[c]) for c in range(2)]
        np.testing.assert_allclose(dt_r, t[0], rtol=1e-13)
        for c in range(2):
            np.testing.assert_allclose(
                ri * dt_V[c] + Vi[c] * dt_r, t[1 + c], rtol=1e-10, atol=1e-12
            )


class TestSelfGravityCoupling:
    def test_self_gravity_refresh_and_run(self):
        grid = Grid2D(12, 12)
        s = make_bumpy_state(grid, amp=0.1)
        cfg = solver2d.SolverConfig2D(
            gravity=GravityConfig(alpha=1, beta=0.5, G_const=0.1), t_end=0.01
        )
        sim = solver2d.Simulation2D(grid, cfg, s)
        sim.run()
        assert sim.gphi is not None
        assert not sim.invalid
        assert np.all(np.isfinite(interior(s.r)))

    def test_external_requires_source(self):
        grid = Grid2D(12, 12)
        cfg = solver2d.SolverConfig2D(gravity=GravityConfig(alpha=0, beta=0.0))
        sim = solver2d.Simulation2D(grid, cfg, solver2d.State2D.uniform(grid))
        with pytest.raises(ValueError):
            sim.refresh_gravity()


class TestGuards:
    def test_dt_underflow(self):
        grid = Grid2D(8, 8)
        s = solver2d.State2D.uniform(grid, r=1.0, Theta=1e22)
        cfg = solver2d.SolverConfig2D(thermo=thermo.ThermoParams(a=1.0))
        with pytest.raises(RuntimeError):
            solver2d.stable_dt(s, grid, cfg)

    def test_invalid_budget(self):
        grid = Grid2D(8, 8)
        sim = solver2d.Simulation2D(grid, solver2d.SolverConfig2D(),
                                    solver2d.State2D.uniform(grid))
        assert not sim.invalid
        sim.floored_rho = 10**6
        assert sim.invalid


class TestManufacturedSolution:
    def test_quick_convergence_order(self):
        params = thermo.ThermoParams(a=0.0, mu0=5e-3, mu1=0.0,
                                     kappa0=5e-3, kappa2=0.0, kappa3=0.0)
        e1 = mms_error_2d(16, params, t_end=0.01)
        e2 = mms_error_2d(32, params, t_end=0.01)
        order = np.log2(e1 / e2)
        assert 1.6 < order < 2.4
