"""Acceptance gate: one test per headline criterion, each printing a single
[PASS]/[FAIL] line with its measured quantity."""

import time

import numpy as np
import pytest

from thinlayer import gravity, harness, relent, solver2d, solver3d, thermo
from thinlayer.fields import Grid2D, Grid3D, interior

from mms_helpers import mms_error_2d, mms_error_3d
from relent_helpers import synthetic_pair


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


class TestAcceptance:
    def test_thermodynamic_consistency(self):
        t0 = time.monotonic()
        worst = 0.0
        rho = np.logspace(-2, 2, 20)
        th = np.logspace(-2, 2, 20)
        R, T = np.meshgrid(rho, th, indexing="ij")
        for a in (0.0, 1.0):
            p = thermo.ThermoParams(a=a)
            worst = max(worst, float(np.max(thermo.maxwell_residual(p, R, T))))
            worst = max(worst, float(np.max(thermo.gibbs_residual(p, R, T))))
        elapsed = time.monotonic() - t0
        report(
            "thermodynamic consistency",
            worst < 1e-6 and elapsed < 1.0,
            f"max residual {worst:.3e} (< 1e-6), {elapsed:.2f} s (< 1 s)",
        )

    def test_structural_hypotheses(self):
        p = thermo.ThermoParams()
        Z = np.logspace(-6, 6, 600)
        ok = bool(np.all(p.P.deriv(Z) > 0.0))
        ratio = (p.gamma * p.P.value(Z) - p.P.deriv(Z) * Z) / Z
        ok &= bool(np.all(ratio > 0.0) and np.all(ratio <= p.gamma + 1e-12))
        ok &= bool(np.all(p.P.entropy_M_deriv(Z) < 0.0))
        tail = abs(float(p.P.entropy_M(1e6)))
        ok &= tail < 1e-5
        report(
            "structural hypotheses",
            ok,
            f"monotonicity/ratio bounds on Z in [1e-6, 1e6]; |M(1e6)| = {tail:.3e} (< 1e-5)",
        )

    def test_coercivity(self):
        t0 = time.monotonic()
        p = thermo.ThermoParams()
        w = relent.EssentialWindow(0.5, 2.0, 0.5, 2.0)
        rep = relent.coercivity_report(p, w)
        rng = np.random.default_rng(7)
        rr = 10.0 ** rng.uniform(-2, 2, 400)
        tt = 10.0 ** rng.uniform(-2, 2, 400)
        E = thermo.relative_entropy_density(p, rr, tt, 1.0, 1.0)
        off = (np.abs(rr - 1.0) > 1e-12) | (np.abs(tt - 1.0) > 1e-12)
        nonneg = bool(np.all(E >= 0.0) and np.all(E[off] > 0.0))
        at_ref = float(thermo.relative_entropy_density(p, 1.0, 1.0, 1.0, 1.0))
        elapsed = time.monotonic() - t0
        report(
            "coercivity constants",
            rep["positive"] and nonneg and at_ref == 0.0 and elapsed < 5.0,
            f"C1={rep['C1']:.3e}, C3={rep['C3']:.3e}, C4={rep['C4']:.3e} (> 0), "
            f"E >= 0 with equality only at reference, {elapsed:.2f} s (< 5 s)",
        )

    def test_gravity_limits(self):
        t0 = time.monotonic()
        grid2 = Grid2D(64, 64)
        x, y = grid2.mesh()
        r2d = 1.0 + 0.5 * np.exp(-10.0 * ((x - 0.45) ** 2 + (y - 0.6) ** 2))
        g = gravity.ExternalDensity.gaussian()
        eps_list = [0.2, 0.1, 0.05, 0.025]
        rows = gravity.limit_errors(eps_list, grid2, r2d=r2d, g=g)
        _, g1, g3, g4 = (np.array(c) for c in zip(*rows))
        mono = bool(np.all(np.diff(g3) < 0.0) and np.all(np.diff(g4) < 0.0))
        final = g3[-1] < 0.1 * g3[0] and g4[-1] < 0.1 * g4[0]
        l0 = gravity.check_l0(g, [(0.25, 0.25), (0.5, 0.5), (0.75, 0.4)])
        elapsed = time.monotonic() - t0
        report(
            "gravity kernel limits",
            mono and final and l0 < 1e-10 and elapsed < 120.0,
            f"G3 {g3[0]:.2e}->{g3[-1]:.2e}, G4 {g4[0]:.2e}->{g4[-1]:.2e} "
            f"(monotone, final < 10%), l0 = {l0:.2e} (< 1e-10), {elapsed:.1f} s (< 120 s)",
        )

    def test_solver_convergence_order(self):
        params = thermo.ThermoParams(a=0.0, mu0=5e-3, mu1=0.0,
                                     kappa0=5e-3, kappa2=0.0, kappa3=0.0)
        e2d = [mms_error_2d(n, params, t_end=0.01) for n in (32, 64)]
        order2 = float(np.log2(e2d[0] / e2d[1]))
        e3d = [mms_error_3d(n, 0.5, params, t_end=0.01) for n in (32, 64)]
        order3 = float(np.log2(e3d[0] / e3d[1]))
        ok = 1.7 <= order2 <= 2.3 and 1.7 <= order3 <= 2.3
        report(
            "manufactured-solution order",
            ok,
            f"planar order {order2:.2f}, layer order {order3:.2f} (within [1.7, 2.3])",
        )

    def test_mass_and_entropy_over_thousand_steps(self):
        grid = Grid3D(16, 16, 4, eps=0.2)
        s = solver3d.State3D.uniform(grid)
        x, y, z = grid.mesh()
        interior(s.rho)[...] = 1.0 + 0.3 * np.cos(np.pi * x) * np.cos(np.pi * y)
        interior(s.theta)[...] = 1.0 + 0.2 * np.cos(np.pi * x) * np.cos(np.pi * y)
        interior(s.u[0])[...] = 0.2 * np.sin(np.pi * x) * np.sin(np.pi * y)
        solver3d.apply_bc(s)
        sim = solver3d.Simulation3D(grid, solver3d.SolverConfig3D(), s)
        m0 = sim.diagnostics().mass
        min_prod = np.inf
        for _ in range(1000):
            sim.step()
            min_prod = min(min_prod, sim.diagnostics().entropy_production)
        drift = abs(sim.diagnostics().mass - m0) / m0
        report(
            "mass conservation and entropy production",
            drift < 1e-11 and min_prod >= -1e-10,
            f"relative mass drift {drift:.2e} over 1000 steps (< 1e-11), "
            f"min entropy production {min_prod:.2e} (>= -1e-10)",
        )

    def test_relative_entropy_identities(self):
        grid3 = Grid3D(16, 16, 4, eps=0.5)
        grid2 = grid3.horizontal
        s2 = solver2d.State2D.uniform(grid2)
        x, y = grid2.mesh()
        interior(s2.r)[...] = 1.0 + 0.2 * np.cos(np.pi * x) * np.cos(np.pi * y)
        solver2d.apply_bc(s2)
        s3 = relent.extend_to_3d(s2, grid3)
        I0 = relent.relative_entropy_functional(s3, s2, grid3, thermo.ThermoParams())

        worst_cancel = 0.0
        rng = np.random.default_rng(3)
        for trial in range(3):
            sp3, sp2, cfg2, E, gphi, dt = synthetic_pair(grid3, chi=0.4 + 0.3 * trial)
            interior(sp3.u[0])[...] += 0.05 * rng.standard_normal((16, 16, 4))
            interior(sp2.V[1])[...] += 0.05 * rng.standard_normal((16, 16))
            rb = relent.remainder_terms(sp3, sp2, grid3, cfg2, E=E, gphi=gphi, dt_fields=dt)
            worst_cancel = max(worst_cancel, abs(rb.cancellation_R7K1),
                               abs(rb.cancellation_R8K2))

        def pair_args(g):
            a3, a2, c2, E_, gp, dtf = synthetic_pair(g)
            return a3, a2, g, c2, E_, gp, dtf

        rb_c = relent.remainder_terms(*pair_args(Grid3D(32, 32, 8, eps=0.5)))
        rb_f = relent.remainder_terms(*pair_args(Grid3D(64, 64, 16, eps=0.5)))
        worst_quad = max(
            abs(a - b) / max(abs(b), 1e-8)
            for a, b in zip(rb_c.R + rb_c.K, rb_f.R + rb_f.K)
        )
        report(
            "relative-entropy identities",
            I0 == 0.0 and worst_cancel < 1e-13 and worst_quad < 0.01,
            f"I(extension) = {I0} (exact 0), worst cancellation {worst_cancel:.2e} "
            f"(< 1e-13), worst quadrature deviation {worst_quad:.4f} (< 1%)",
        )

    def test_headline_dimension_reduction(self, tmp_path):
        t0 = time.monotonic()
        lines = []
        ok = True
        for alpha, beta in ((0, 0.0), (1, 0.5)):
            cfg = harness.StudyConfig(
                name=f"headline-a{alpha}",
                grid2d=(64, 64),
                grid3d=(64, 64, 8),
                eps_list=(0.2, 0.1, 0.05),
                t_end=0.25,
                alpha=alpha,
                beta=beta,
                outdir=str(tmp_path / f"headline-a{alpha}"),
            )
            rep = harness.run_study(cfg, quiet=True)
            if rep["failed"]:
                ok = False
                lines.append(f"regime ({alpha},{beta}): run failed")
                continue
            sup = [rep["eps"][str(e)]["sup_I"] for e in cfg.eps_list]
            w12 = [rep["eps"][str(e)]["int_u_W12"] for e in cfg.eps_list]
            thL2 = [rep["eps"][str(e)]["int_theta_L2"] for e in cfg.eps_list]
            strict = all(b < a for a, b in zip(sup, sup[1:]))
            w12_ratio = w12[0] / w12[-1]
            th_ratio = thL2[0] / thL2[-1]
            ok &= strict and w12_ratio >= 2.0 and th_ratio >= 2.0
            lines.append(
                f"regime ({alpha},{beta}): sup_t I = "
                + " > ".join(f"{v:.3e}" for v in sup)
                + f" (strict: {strict}), W12 ratio {w12_ratio:.1f}x, "
                f"theta ratio {th_ratio:.1f}x (each >= 2x)"
            )
        elapsed = time.monotonic() - t0
        ok &= elapsed < 1800.0
        report(
            "headline dimension reduction",
            ok,
            "; ".join(lines) + f"; total {elapsed:.0f} s (< 1800 s)",
        )

    def test_determinism(self, tmp_path):
        import os

        cfg_kw = dict(
            name="det", grid2d=(16, 16), grid3d=(16, 16, 4),
            eps_list=(0.2, 0.1), t_end=0.02, snapshots=3,
            outdir=str(tmp_path / "det"),
        )
        harness.run_study(harness.StudyConfig(**cfg_kw), quiet=True)
        names = ("ref2d.csv", "convergence.csv", "diag_eps0.2.csv", "diag_eps0.1.csv")
        first = {
            n: open(os.path.join(cfg_kw["outdir"], n), "rb").read() for n in names
        }
        harness.run_study(harness.StudyConfig(**cfg_kw), quiet=True)
        same = all(
            open(os.path.join(cfg_kw["outdir"], n), "rb").read() == first[n]
            for n in names
        )
        report(
            "determinism",
            same,
            "identical config + seed reproduces all CSVs byte-identically",
        )
