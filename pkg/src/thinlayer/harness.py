"""Study driver and CLI.

Prepares well-prepared initial data (a planar state whose pressure balances
gravity and the centrifugal force at the boundary, extended to 3D with an
O(eps) perturbation of zero vertical mean), runs the planar reference and the
eps-sweep of 3D simulations, and writes per-time diagnostics plus the
convergence table of the relative-entropy functional and the velocity /
temperature distances.

Subcommands: run, limits, thermo-check, version.  Exit codes: 0 success,
1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__, thermo, relent, io
from .fields import Grid2D, Grid3D, interior
from .gravity import (
    GravityConfig,
    ExternalDensity,
    potential_2d_self,
    potential_2d_external,
    check_l0,
    limit_errors,
)
from .solver2d import State2D, SolverConfig2D, Simulation2D
from .solver3d import State3D, SolverConfig3D, Simulation3D

__all__ = ["StudyConfig", "prepare_initial_data", "run_study", "main"]


@dataclass
class StudyConfig:
    name: str = "default"
    grid2d: tuple = (64, 64)
    grid3d: tuple = (64, 64, 8)
    eps_list: tuple = (0.2, 0.1, 0.05)
    t_end: float = 0.25
    alpha: int = 1
    beta: float = 0.5
    chi: float = 0.5
    G_const: float = 1.0
    thermo: thermo.ThermoParams = dc_field(
        default_factory=lambda: thermo.ThermoParams(
            mu0=5e-3, mu1=0.0, kappa0=5e-3, kappa2=0.0, kappa3=0.0
        )
    )
    recipe: str = "bump"
    delta: object = "eps"  # "eps" or a number
    outdir: str = "out/default"
    snapshots: int = 11
    seed: int = 1234
    cfl: float = 0.4

    def __post_init__(self):
        eps = tuple(self.eps_list)
        if any(not 0.0 < e <= 1.0 for e in eps):
            raise ValueError("every eps must lie in (0, 1]")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_list must be strictly decreasing")
        GravityConfig(alpha=self.alpha, beta=self.beta, chi=self.chi, G_const=self.G_const)
        if self.recipe not in ("bump",):
            raise ValueError(f"unknown initial-data recipe: {self.recipe!r}")
        if self.snapshots < 2:
            raise ValueError("need at least two snapshot times")
        if self.t_end <= 0.0:
            raise ValueError("end time must be positive")

    @classmethod
    def from_json(cls, path: str) -> "StudyConfig":
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        tp = thermo.ThermoParams(**raw.pop("thermo", {}))
        known = {
            "name", "grid2d", "grid3d", "eps_list", "t_end", "alpha", "beta",
            "chi", "G_const", "recipe", "delta", "outdir", "snapshots", "seed", "cfl",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("grid2d", "grid3d", "eps_list"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(thermo=tp, **raw)

    def gravity_config(self) -> GravityConfig:
        return GravityConfig(alpha=self.alpha, beta=self.beta,
                             chi=self.chi, G_const=self.G_const)


def _invert_theta_from_pressure(params, rho, p_target, guess):
    """Solve p(rho, theta) = p_target for theta (dp/dtheta > 0)."""
    theta = np.maximum(guess, 1e-8)
    for _ in range(60):
        f = thermo.pressure(params, rho, theta) - p_target
        theta_new = np.maximum(theta - f / thermo.dp_dtheta(params, rho, theta), 0.5 * theta)
        if np.max(np.abs(theta_new - theta) / np.maximum(theta, 1e-14)) < 1e-15:
            return theta_new
        theta = theta_new
    return theta


def _bump(x, y, center, width, amp):
    d2 = ((x - center[0]) ** 2 + (y - center[1]) ** 2) / width**2
    return amp * np.maximum(0.0, 1.0 - d2) ** 3


def default_external_density() -> ExternalDensity:
    return ExternalDensity.gaussian()


def prepare_initial_data(cfg: StudyConfig):
    """Planar data (r0, 0, Theta0) with boundary-compatible pressure, plus the
    extended 3D data per eps with an O(eps) zero-vertical-mean perturbation."""
    grid2 = Grid2D(*cfg.grid2d)
    xg, yg = grid2.mesh(ghosts=2)
    base, amp, width = 1.0, 0.5, 0.25
    r0g = base + _bump(xg, yg, (0.5, 0.5), width, amp)
    r0 = r0g[2:-2, 2:-2]

    g_ext = default_external_density() if cfg.alpha == 0 else None
    if cfg.alpha == 1:
        phi = potential_2d_self(r0, grid2, cfg.G_const)
    else:
        phi = potential_2d_external(g_ext, grid2, cfg.G_const)
    xi, yi = grid2.mesh()
    psi = phi + cfg.chi**2 * (xi**2 + yi**2)
    # Balanced pressure: linear in the force potential so that the discrete
    # momentum balance holds exactly where r0 is constant (hence on the whole
    # boundary).  The offset keeps p0 above the cold-pressure floor
    # p_inf * rho^gamma, below which no positive temperature exists.
    p_ref = 2.5 * float(thermo.pressure(cfg.thermo, np.array(base), np.array(1.0)))
    p0 = p_ref + base * (psi - psi.mean())
    floor = cfg.thermo.p_inf * r0**cfg.thermo.gamma
    if np.min(p0 - 1.15 * floor) <= 0.0:
        raise ValueError(
            "balanced pressure falls below the cold-pressure floor; "
            "reduce G_const, chi, or the density bump amplitude"
        )
    theta0 = _invert_theta_from_pressure(cfg.thermo, r0, p0, np.ones_like(r0))
    p_check = thermo.pressure(cfg.thermo, r0, theta0)
    if np.max(np.abs(p_check - p0)) > 1e-9 * p_ref:
        raise ValueError("temperature inversion for the balanced pressure failed")

    s2 = State2D.uniform(grid2)
    interior(s2.r)[...] = r0
    interior(s2.Theta)[...] = theta0

    rng = np.random.default_rng(cfg.seed)
    coef = 0.5 + 0.5 * rng.random(5)

    states3 = {}
    for eps in cfg.eps_list:
        grid3 = Grid3D(cfg.grid3d[0], cfg.grid3d[1], cfg.grid3d[2], eps=eps)
        s3 = relent.extend_to_3d(s2, grid3)
        delta = eps if cfg.delta == "eps" else float(cfg.delta)
        if delta:
            x3, y3, z3 = grid3.mesh(ghosts=2)
            env = np.sin(np.pi * x3) * np.sin(np.pi * y3)
            vert = np.cos(np.pi * z3)  # zero mean over cell centers, exactly
            s3.rho += delta * 0.3 * coef[0] * np.cos(np.pi * x3) * np.cos(np.pi * y3) * vert
            s3.theta += delta * 0.2 * coef[1] * np.cos(np.pi * x3) * np.cos(np.pi * y3) * vert
            s3.u[0] += delta * coef[2] * env * vert
            s3.u[1] -= delta * coef[3] * env * vert
            s3.u[2] += delta * coef[4] * env * np.sin(np.pi * z3)
        states3[eps] = s3
    return s2, states3, g_ext


def compatibility_residual(cfg: StudyConfig, s2: State2D) -> float:
    """Max boundary-cell residual of the stationary momentum balance for the
    prepared data (V0 = 0): grad p(r0, Theta0) - r0 grad(phi + |chi x|^2)."""
    grid2 = Grid2D(*cfg.grid2d)
    r0 = interior(s2.r)
    th0 = interior(s2.Theta)
    if cfg.alpha == 1:
        phi = potential_2d_self(r0, grid2, cfg.G_const)
    else:
        phi = potential_2d_external(default_external_density(), grid2, cfg.G_const)
    xi, yi = grid2.mesh()
    psi = phi + cfg.chi**2 * (xi**2 + yi**2)
    p0 = thermo.pressure(cfg.thermo, r0, th0)

    def edge_grad(f):
        pad = np.pad(f, 1, mode="edge")
        gx = (pad[2:, 1:-1] - pad[:-2, 1:-1]) / (2 * grid2.hx)
        gy = (pad[1:-1, 2:] - pad[1:-1, :-2]) / (2 * grid2.hy)
        return gx, gy

    px, py = edge_grad(p0)
    fx, fy = edge_grad(psi)
    rx = (px - r0 * fx) / r0
    ry = (py - r0 * fy) / r0
    edge = np.zeros_like(r0, dtype=bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    return float(np.max(np.hypot(rx, ry)[edge]))


def _w12_distance(s3: State3D, ref3: State3D, grid3: Grid3D) -> float:
    """Squared W^{1,2}(Omega) distance of the velocities (unscaled gradient)."""
    total = 0.0
    for c in range(3):
        d = s3.u[c] - ref3.u[c]
        di = interior(d)
        gx = (d[2:, 1:-1, 1:-1] - d[:-2, 1:-1, 1:-1]) / (2 * grid3.hx)
        gy = (d[1:-1, 2:, 1:-1] - d[1:-1, :-2, 1:-1]) / (2 * grid3.hy)
        gz = (d[1:-1, 1:-1, 2:] - d[1:-1, 1:-1, :-2]) / (2 * grid3.hz)
        ii = (slice(1, -1),) * 3
        total += float(np.sum(di**2)) + float(
            np.sum((gx**2 + gy**2 + gz**2)[ii])
        )
    return total * grid3.cell_vol


def _theta_distances(s3: State3D, ref3: State3D, grid3: Grid3D):
    dth = interior(s3.theta) - interior(ref3.theta)
    dlog = np.log(interior(s3.theta)) - np.log(interior(ref3.theta))
    dv = grid3.cell_vol
    return float(np.sum(dth**2)) * dv, float(np.sum(dlog**2)) * dv


def run_study(cfg: StudyConfig, quiet: bool = False):
    """Run the planar reference and the eps-sweep; write diagnostics and the
    convergence table; return a study report dictionary."""
    out = io.output_dir(cfg.outdir)
    log = (lambda *a, **k: None) if quiet else print

    if cfg.alpha == 0:
        g_probe = default_external_density()
        probes = [(0.25, 0.25), (0.5, 0.5), (0.75, 0.4)]
        l0 = check_l0(g_probe, probes)
        if l0 > 1e-8:
            raise ValueError(
                f"external density violates the vertical-force cancellation "
                f"condition (residual {l0:.3e}); the planar limit is invalid"
            )

    s2, states3, g_ext = prepare_initial_data(cfg)
    comp = compatibility_residual(cfg, s2)
    log(f"[study {cfg.name}] boundary compatibility residual: {comp:.3e}")

    grid2 = Grid2D(*cfg.grid2d)
    gcfg = cfg.gravity_config()
    cfg2 = SolverConfig2D(thermo=cfg.thermo, gravity=gcfg, g_ext=g_ext,
                          cfl=cfg.cfl, t_end=cfg.t_end)
    times = np.linspace(0.0, cfg.t_end, cfg.snapshots)

    # planar reference: store a snapshot state at each time
    sim2 = Simulation2D(grid2, cfg2, s2)
    sim2.refresh_gravity()
    ref_states = [s2.copy()]
    rows2 = []
    for t in times[1:]:
        sim2.run(t_end=float(t))
        ref_states.append(s2.copy())
    window = relent.EssentialWindow.from_state(ref_states[0])
    for st in ref_states[1:]:
        window = window.widen(relent.EssentialWindow.from_state(st))
    for k, st in enumerate(ref_states):
        r = interior(st.r)
        th = interior(st.Theta)
        V2 = interior(st.V[0]) ** 2 + interior(st.V[1]) ** 2
        e = thermo.internal_energy(cfg.thermo, r, th)
        rows2.append(
            ",".join(
                format(v, ".12e")
                for v in (
                    st.time,
                    float(np.sum(r)) * grid2.cell_area,
                    float(np.sum(0.5 * r * V2 + r * e)) * grid2.cell_area,
                    float(np.sum(r * thermo.entropy(cfg.thermo, r, th))) * grid2.cell_area,
                )
            )
        )
        io.write_snapshot(
            os.path.join(out, f"ref2d_{k:03d}.snap"),
            {"kind": "state2d", "nx": grid2.nx, "ny": grid2.ny,
             "time": st.time, "eps": 0.0},
            {"r": interior(st.r), "V1": interior(st.V[0]),
             "V2": interior(st.V[1]), "Theta": interior(st.Theta)},
        )
    io.write_csv(os.path.join(out, "ref2d.csv"), "t,mass,energy,total_entropy", rows2)
    if sim2.invalid:
        raise RuntimeError("planar reference run exceeded the positivity-floor budget")

    report = {
        "name": cfg.name,
        "window": {"rho_lo": window.rho_lo, "rho_hi": window.rho_hi,
                   "theta_lo": window.theta_lo, "theta_hi": window.theta_hi},
        "compatibility_residual": comp,
        "eps": {},
    }
    conv_rows = []

    for eps in cfg.eps_list:
        grid3 = Grid3D(cfg.grid3d[0], cfg.grid3d[1], cfg.grid3d[2], eps=eps)
        cfg3 = SolverConfig3D(thermo=cfg.thermo, gravity=gcfg, g_ext=g_ext,
                              cfl=cfg.cfl, t_end=cfg.t_end)
        sim3 = Simulation3D(grid3, cfg3, states3[eps])
        rows = []
        sup_I = 0.0
        w12_series, th_series, logth_series = [], [], []
        try:
            for k, (t, ref) in enumerate(zip(times, ref_states)):
                if t > 0.0:
                    sim3.run(t_end=float(t))
                s3 = sim3.state
                I, kin, ent = relent.relative_entropy_functional(
                    s3, ref, grid3, cfg.thermo, parts=True
                )
                sup_I = max(sup_I, I)
                ess, res = relent.essential_residual_masks(s3, window)
                res_vol = float(np.count_nonzero(res)) * grid3.cell_vol
                gphi2 = Simulation2D(grid2, cfg2, ref)
                gphi2.refresh_gravity()
                rb = relent.remainder_terms(
                    s3, ref, grid3, cfg2, E=sim3.E, gphi=gphi2.gphi
                )
                rows.append(relent.remainder_csv_row(t, I, kin, ent, res_vol, rb))
                ref3 = relent.extend_to_3d(ref, grid3)
                w12_series.append(_w12_distance(s3, ref3, grid3))
                dth, dlog = _theta_distances(s3, ref3, grid3)
                th_series.append(dth)
                logth_series.append(dlog)
                io.write_snapshot(
                    os.path.join(out, f"eps{eps:g}_{k:03d}.snap"),
                    {"kind": "state3d", "nx": grid3.nx, "ny": grid3.ny,
                     "nz": grid3.nz, "time": s3.time, "eps": eps},
                    {"rho": interior(s3.rho), "u1": interior(s3.u[0]),
                     "u2": interior(s3.u[1]), "u3": interior(s3.u[2]),
                     "theta": interior(s3.theta)},
                )
            if sim3.invalid:
                raise RuntimeError("positivity-floor budget exceeded")
        except (RuntimeError, FloatingPointError) as exc:
            report["eps"][str(eps)] = {"status": "failed", "error": str(exc)}
            io.write_csv(os.path.join(out, f"diag_eps{eps:g}.csv"),
                         relent.remainder_csv_header(), rows)
            continue
        io.write_csv(os.path.join(out, f"diag_eps{eps:g}.csv"),
                     relent.remainder_csv_header(), rows)
        int_w12 = float(np.trapezoid(w12_series, times))
        int_th = float(np.trapezoid(th_series, times))
        int_logth = float(np.trapezoid(logth_series, times))
        report["eps"][str(eps)] = {
            "status": "ok", "sup_I": sup_I, "int_u_W12": int_w12,
            "int_theta_L2": int_th, "int_logtheta_L2": int_logth,
            "steps": sim3.nsteps,
        }
        conv_rows.append(
            ",".join(format(v, ".12e") for v in (eps, sup_I, int_w12, int_th, int_logth))
        )
        log(f"[study {cfg.name}] eps={eps:g}: sup_t I = {sup_I:.6e} "
            f"({sim3.nsteps} steps)")

    io.write_csv(
        os.path.join(out, "convergence.csv"),
        "eps,sup_I,int_u_W12,int_theta_L2,int_logtheta_L2",
        conv_rows,
    )
    report["failed"] = any(v.get("status") != "ok" for v in report["eps"].values())
    with open(os.path.join(out, "study.json"), "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
    return report


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _cmd_run(path: str) -> int:
    try:
        cfg = StudyConfig.from_json(path)
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        report = run_study(cfg)
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, FloatingPointError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0 if not report["failed"] else 2


def _cmd_limits(path: str) -> int:
    try:
        cfg = StudyConfig.from_json(path)
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    grid2 = Grid2D(*cfg.grid2d)
    eps_list = list(cfg.eps_list)
    x, y = grid2.mesh()
    r2d = 1.0 + 0.5 * np.exp(-10.0 * ((x - 0.45) ** 2 + (y - 0.6) ** 2))
    try:
        rows = limit_errors(eps_list, grid2, r2d=r2d,
                            g=default_external_density(), G=cfg.G_const)
    except (RuntimeError, FloatingPointError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    out = io.output_dir(cfg.outdir)
    text = ["eps,G1_err,G3_err,G4_err"]
    for r in rows:
        text.append(",".join(format(v, ".12e") for v in r))
    io.write_csv(os.path.join(out, "limits.csv"), text[0], text[1:])
    print("\n".join(text))
    return 0


def _cmd_thermo_check(path: str) -> int:
    try:
        cfg = StudyConfig.from_json(path)
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    params = cfg.thermo
    rho = np.logspace(-2, 2, 20)
    th = np.logspace(-2, 2, 20)
    R, T = np.meshgrid(rho, th, indexing="ij")
    mx = float(np.max(thermo.maxwell_residual(params, R, T)))
    gb = float(np.max(thermo.gibbs_residual(params, R, T)))
    w = relent.EssentialWindow(0.5, 2.0, 0.5, 2.0)
    rep = relent.coercivity_report(params, w)
    print(f"maxwell residual (max over 20x20 log grid): {mx:.3e}")
    print(f"gibbs residual   (max over 20x20 log grid): {gb:.3e}")
    print("coercivity constants: "
          + ", ".join(f"{k}={rep[k]:.4e}" for k in ("C1", "C2", "C3", "C4")))
    ok = mx < 1e-6 and gb < 1e-6 and rep["positive"]
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="thinlayer",
        description="Thin-layer dimension-reduction laboratory",
    )
    sub = parser.add_subparsers(dest="command")
    for name in ("run", "limits", "thermo-check"):
        p = sub.add_parser(name)
        p.add_argument("config")
    sub.add_parser("version")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    if args.command == "version":
        print(__version__)
        return 0
    if args.command == "run":
        return _cmd_run(args.config)
    if args.command == "limits":
        return _cmd_limits(args.config)
    if args.command == "thermo-check":
        return _cmd_thermo_check(args.config)
    parser.print_usage(sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
