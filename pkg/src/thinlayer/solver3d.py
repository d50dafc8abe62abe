"""Explicit finite-volume integrator for the rescaled primitive system on
the layer omega x (0, 1).

Convective terms use Rusanov fluxes with central-slope linear reconstruction
(second order on smooth fields); diffusive terms are centered; the thermal
variable is the internal energy density rho*e.  Time stepping is SSP-RK2 with
a CFL restriction that accounts for the 1/eps scaling of vertical transport.

Mass is conserved exactly: the reflect-negate ghost closure makes the wall
mass fluxes vanish bitwise, and interior fluxes telescope.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import thermo
from .fields import (
    NG,
    Grid3D,
    apply_scalar_bc_3d,
    apply_velocity_bc_3d,
    check_finite,
    interior,
    new_field,
    stress_3d,
    grad_eps,
    div_eps,
)
from .gravity import GravityConfig, ExternalDensity, force_3d, centrifugal_force_3d

__all__ = ["State3D", "SolverConfig3D", "DiagnosticsRecord", "Simulation3D", "invert_temperature"]


@dataclass
class State3D:
    """Ghosted primitive fields on a Grid3D."""

    rho: np.ndarray
    u: np.ndarray  # shape (3, ...) ghosted
    theta: np.ndarray
    time: float = 0.0

    @classmethod
    def uniform(cls, grid: Grid3D, rho=1.0, theta=1.0):
        s = cls(new_field(grid), new_field(grid, 3), new_field(grid))
        s.rho[...] = rho
        s.theta[...] = theta
        return s

    def copy(self):
        return State3D(self.rho.copy(), self.u.copy(), self.theta.copy(), self.time)


@dataclass
class SolverConfig3D:
    thermo: thermo.ThermoParams = dc_field(default_factory=thermo.ThermoParams)
    gravity: GravityConfig | None = None
    g_ext: ExternalDensity | None = None
    cfl: float = 0.4
    t_end: float = 0.1
    gravity_stride: int = 5
    theta_floor: float = 1.0e-8
    max_floor_fraction: float = 1.0e-4

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.9:
            raise ValueError("cfl must lie in (0, 0.9]")
        if self.t_end <= 0.0:
            raise ValueError("end time must be positive")


@dataclass
class DiagnosticsRecord:
    time: float
    mass: float
    energy: float
    total_entropy: float
    entropy_production: float
    norms: dict
    floored_theta: int = 0
    floored_rho: int = 0


def apply_bc(state: State3D):
    apply_scalar_bc_3d(state.rho, even_lateral=True, even_vertical=True)
    apply_scalar_bc_3d(state.theta, even_lateral=True, even_vertical=True)
    apply_velocity_bc_3d(state.u)


def invert_temperature(params, rho, e_target, guess, floor=1.0e-8):
    """Solve e(rho, theta) = e_target for theta by guarded Newton iteration."""
    theta = np.maximum(guess, floor)
    for _ in range(50):
        f = thermo.internal_energy(params, rho, theta) - e_target
        df = thermo.de_dtheta(params, rho, theta)
        step = f / df
        theta_new = np.maximum(theta - step, 0.5 * theta)
        theta_new = np.maximum(theta_new, floor)
        if np.max(np.abs(theta_new - theta) / np.maximum(theta, 1e-14)) < 1e-14:
            theta = theta_new
            break
        theta = theta_new
    return theta


def _slope(q, axis):
    """Central slope (q_{i+1} - q_{i-1})/4 along axis, shrinking it by 2."""
    lo = [slice(None)] * q.ndim
    hi = [slice(None)] * q.ndim
    lo[axis] = slice(None, -2)
    hi[axis] = slice(2, None)
    mid = [slice(None)] * q.ndim
    mid[axis] = slice(1, -1)
    return q[tuple(mid)], (q[tuple(hi)] - q[tuple(lo)]) / 4.0


def _face_states(q, axis):
    """Left/right reconstructed states at the n+1 interior+wall interfaces.

    q is ghosted along ``axis`` (NG=2); the returned arrays span interfaces
    between cells NG-1..n+NG-1, trimmed to the interior in the other axes.
    """
    mid, s = _slope(q, axis)
    sel_other = [slice(NG, -NG)] * q.ndim
    sel_other[axis] = slice(None)
    mid = mid[tuple(sel_other)]
    s = s[tuple(sel_other)]
    left = [slice(None)] * q.ndim
    left[axis] = slice(0, -1)
    right = [slice(None)] * q.ndim
    right[axis] = slice(1, None)
    qL = mid[tuple(left)] + s[tuple(left)]
    qR = mid[tuple(right)] - s[tuple(right)]
    return qL, qR


def _flux_divergence(state: State3D, grid: Grid3D, params):
    """Convective tendency for (rho, m1, m2, m3, rho*e) on the interior."""
    rho, u, th = state.rho, state.u, state.theta
    h_eff = (grid.hx, grid.hy, grid.eps * grid.hz)
    tend = [0.0] * 5
    for axis in range(3):
        rL, rR = _face_states(rho, axis)
        tL, tR = _face_states(th, axis)
        tL = np.maximum(tL, 1e-12)
        tR = np.maximum(tR, 1e-12)
        rL = np.maximum(rL, 1e-12)
        rR = np.maximum(rR, 1e-12)
        uL = [None] * 3
        uR = [None] * 3
        for c in range(3):
            uL[c], uR[c] = _face_states(u[c], axis)
        pL = thermo.pressure(params, rL, tL)
        pR = thermo.pressure(params, rR, tR)
        eL = thermo.internal_energy(params, rL, tL)
        eR = thermo.internal_energy(params, rR, tR)
        cL = thermo.sound_speed(params, rL, tL)
        cR = thermo.sound_speed(params, rR, tR)
        unL, unR = uL[axis], uR[axis]
        lam = np.maximum(np.abs(unL) + cL, np.abs(unR) + cR)

        QL = [rL, rL * uL[0], rL * uL[1], rL * uL[2], rL * eL]
        QR = [rR, rR * uR[0], rR * uR[1], rR * uR[2], rR * eR]
        FL = [unL * q for q in QL]
        FR = [unR * q for q in QR]
        FL[1 + axis] = FL[1 + axis] + pL
        FR[1 + axis] = FR[1 + axis] + pR

        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        for k in range(5):
            F = 0.5 * (FL[k] + FR[k]) - 0.5 * lam * (QR[k] - QL[k])
            tend[k] = tend[k] - (F[tuple(hi)] - F[tuple(lo)]) / h_eff[axis]
    return tend


def rhs(state: State3D, grid: Grid3D, cfg: SolverConfig3D, E=None, mms=None):
    """Semi-discrete tendencies for (rho, m, rho*e) on the interior cells.

    ``E`` is the gravity field on the interior (or None); ``mms`` an optional
    manufactured-solution forcing tuple with the same layout as the output.
    """
    params = cfg.thermo
    apply_bc(state)
    rho, u, th = state.rho, state.u, state.theta

    d_rho, d_m1, d_m2, d_m3, d_re = _flux_divergence(state, grid, params)
    d_m = [d_m1, d_m2, d_m3]

    # viscous stress divergence (stress lives on the interior plus one ring)
    mu1 = thermo.viscosity(params, th[1:-1, 1:-1, 1:-1])
    S = stress_3d(mu1, u, grid)
    from .fields import _dx, _dy, _dz  # centered differences, shrink one ring

    for i in range(3):
        d_m[i] = d_m[i] + (
            _dx(S[i, 0], grid.hx) + _dy(S[i, 1], grid.hy) + _dz(S[i, 2], grid.hz) / grid.eps
        )

    # heat conduction
    kap1 = thermo.conductivity(params, th[1:-1, 1:-1, 1:-1])
    gth = grad_eps(th, grid)
    q = -kap1 * gth
    d_re = d_re - (
        _dx(q[0], grid.hx) + _dy(q[1], grid.hy) + _dz(q[2], grid.hz) / grid.eps
    )

    # dissipation and compression work sources
    G = np.stack([grad_eps(u[i], grid) for i in range(3)])
    SdotG = np.einsum("ij...,ij...->...", S, G)
    divu = G[0, 0] + G[1, 1] + G[2, 2]
    ii = (slice(1, -1),) * 3
    p_int = thermo.pressure(params, interior(rho), interior(th))
    d_re = d_re + SdotG[ii] - p_int * divu[ii]

    # rotation, centrifugal, gravity
    ri = interior(rho)
    ui = [interior(u[c]) for c in range(3)]
    chi = cfg.gravity.chi if cfg.gravity is not None else 0.0
    if chi != 0.0:
        d_m[0] = d_m[0] + ri * chi * ui[1]
        d_m[1] = d_m[1] - ri * chi * ui[0]
        cen = centrifugal_force_3d(chi, grid)
        d_m[0] = d_m[0] + ri * cen[0]
        d_m[1] = d_m[1] + ri * cen[1]
    if E is not None and cfg.gravity is not None:
        scale = grid.eps ** (-2.0 * cfg.gravity.beta)
        for c in range(3):
            d_m[c] = d_m[c] + scale * ri * E[c]

    out = [d_rho, d_m[0], d_m[1], d_m[2], d_re]
    if mms is not None:
        out = [a + b for a, b in zip(out, mms)]
    for k, a in enumerate(out):
        if not np.all(np.isfinite(a)):
            bad = np.argwhere(~np.isfinite(a))[0]
            raise FloatingPointError(f"non-finite tendency component {k} at cell {bad.tolist()}")
    return out


def stable_dt(state: State3D, grid: Grid3D, cfg: SolverConfig3D):
    params = cfg.thermo
    ri = np.maximum(interior(state.rho), 1e-12)
    ti = interior(state.theta)
    ui = [interior(state.u[c]) for c in range(3)]
    c = thermo.sound_speed(params, ri, ti)
    nu = thermo.viscosity(params, ti) / ri
    dif = nu + thermo.conductivity(params, ti) / (ri * thermo.de_dtheta(params, ri, ti))
    hz_eff = grid.eps * grid.hz
    rate = (
        (np.abs(ui[0]) + c) / grid.hx
        + (np.abs(ui[1]) + c) / grid.hy
        + (np.abs(ui[2]) + c) / hz_eff
        + 2.0 * dif * (1.0 / grid.hx**2 + 1.0 / grid.hy**2 + 1.0 / hz_eff**2)
    )
    dt = cfg.cfl / float(np.max(rate))
    if dt < 1e-12:
        raise RuntimeError("time step underflow")
    return dt


class Simulation3D:
    """Owns a State3D and advances it; refreshes gravity every few steps."""

    def __init__(self, grid: Grid3D, cfg: SolverConfig3D, state: State3D):
        self.grid = grid
        self.cfg = cfg
        self.state = state
        self.E = None
        self._E2 = None
        self._steps_since_gravity = None
        self.floored_theta = 0
        self.floored_rho = 0
        self.nsteps = 0

    def refresh_gravity(self):
        cfg = self.cfg
        if cfg.gravity is None:
            self.E = None
            return
        if cfg.gravity.alpha == 0 and self._E2 is not None:
            self.E = self._E2
            return
        self.E = force_3d(interior(self.state.rho), cfg.g_ext, cfg.gravity, self.grid,
                          E2=self._E2)
        if cfg.gravity.alpha == 0:
            self._E2 = self.E
        self._steps_since_gravity = 0

    def _primitives_from_conserved(self, r_new, m_new, re_new, guess):
        floor_rho = r_new < 1e-12
        self.floored_rho += int(np.count_nonzero(floor_rho))
        r_new = np.maximum(r_new, 1e-12)
        u_new = [m / r_new for m in m_new]
        e_new = re_new / r_new
        th_new = invert_temperature(self.cfg.thermo, r_new, e_new, guess,
                                    floor=self.cfg.theta_floor)
        low = th_new <= self.cfg.theta_floor
        self.floored_theta += int(np.count_nonzero(low))
        return r_new, u_new, th_new

    def step(self, dt=None, mms=None):
        grid, cfg, s = self.grid, self.cfg, self.state
        apply_bc(s)
        if self.E is None and cfg.gravity is not None:
            self.refresh_gravity()
        elif cfg.gravity is not None and cfg.gravity.alpha == 1:
            if self._steps_since_gravity is None or self._steps_since_gravity >= cfg.gravity_stride:
                self.refresh_gravity()
        if dt is None:
            dt = stable_dt(s, grid, cfg)
        params = cfg.thermo

        def conserved(st):
            r = interior(st.rho)
            e = thermo.internal_energy(params, r, interior(st.theta))
            return r.copy(), [r * interior(st.u[c]) for c in range(3)], r * e

        r0, m0, re0 = conserved(s)

        def advance(st, r, m, re):
            src = None if mms is None else mms(st.time)
            t = rhs(st, grid, cfg, self.E, src)
            return (r + dt * t[0], [m[c] + dt * t[1 + c] for c in range(3)], re + dt * t[4])

        # stage 1
        r1, m1, re1 = advance(s, r0, m0, re0)
        s1 = s.copy()
        s1.time = s.time + dt
        rr, uu, tt = self._primitives_from_conserved(r1, m1, re1, interior(s.theta))
        interior(s1.rho)[...] = rr
        for c in range(3):
            interior(s1.u[c])[...] = uu[c]
        interior(s1.theta)[...] = tt
        apply_bc(s1)

        # stage 2 (Heun average)
        r2, m2, re2 = advance(s1, r1, m1, re1)
        rF = 0.5 * (r0 + r2)
        mF = [0.5 * (m0[c] + m2[c]) for c in range(3)]
        reF = 0.5 * (re0 + re2)
        rr, uu, tt = self._primitives_from_conserved(rF, mF, reF, interior(s1.theta))
        interior(s.rho)[...] = rr
        for c in range(3):
            interior(s.u[c])[...] = uu[c]
        interior(s.theta)[...] = tt
        s.time += dt
        apply_bc(s)
        self.nsteps += 1
        if self._steps_since_gravity is not None:
            self._steps_since_gravity += 1
        return dt

    def run(self, t_end=None, mms=None, callback=None):
        t_end = t_end if t_end is not None else self.cfg.t_end
        while self.state.time < t_end - 1e-14:
            dt = min(stable_dt(self.state, self.grid, self.cfg), t_end - self.state.time)
            self.step(dt=dt, mms=mms)
            if callback is not None:
                callback(self)
        return self.state

    @property
    def invalid(self):
        ncell = self.grid.nx * self.grid.ny * self.grid.nz
        budget = self.cfg.max_floor_fraction * ncell * max(1, self.nsteps)
        return (self.floored_theta + self.floored_rho) > budget

    def diagnostics(self):
        return diagnostics(self.state, self.grid, self.cfg)


def diagnostics(state: State3D, grid: Grid3D, cfg: SolverConfig3D) -> DiagnosticsRecord:
    """Mass, total energy, total entropy, entropy production, est-type norms."""
    params = cfg.thermo
    apply_bc(state)
    dv = grid.cell_vol
    r = interior(state.rho)
    th = interior(state.theta)
    ui = [interior(state.u[c]) for c in range(3)]
    e = thermo.internal_energy(params, r, th)
    s = thermo.entropy(params, r, th)
    ke = 0.5 * r * (ui[0] ** 2 + ui[1] ** 2 + ui[2] ** 2)
    mass = float(np.sum(r)) * dv
    energy = float(np.sum(ke + r * e)) * dv
    tot_s = float(np.sum(r * s)) * dv

    # entropy production assembled as a sum of nonnegative terms
    ii = (slice(1, -1),) * 3
    mu1 = thermo.viscosity(params, state.theta[1:-1, 1:-1, 1:-1])
    S = stress_3d(mu1, state.u, grid)
    G = np.stack([grad_eps(state.u[i], grid) for i in range(3)])
    SdotG = np.einsum("ij...,ij...->...", S, G)[ii]
    gth = grad_eps(state.theta, grid)
    gth2 = (gth[0] ** 2 + gth[1] ** 2 + gth[2] ** 2)[ii]
    kap = thermo.conductivity(params, th)
    prod = float(np.sum(SdotG / th + kap * gth2 / th**2)) * dv

    # unscaled velocity gradient for the W^{1,2}-type norm
    gu2 = 0.0
    for c in range(3):
        g = np.stack(
            [
                (state.u[c][2:, 1:-1, 1:-1] - state.u[c][:-2, 1:-1, 1:-1]) / (2 * grid.hx),
                (state.u[c][1:-1, 2:, 1:-1] - state.u[c][1:-1, :-2, 1:-1]) / (2 * grid.hy),
                (state.u[c][1:-1, 1:-1, 2:] - state.u[c][1:-1, 1:-1, :-2]) / (2 * grid.hz),
            ]
        )
        gu2 = gu2 + (g[0] ** 2 + g[1] ** 2 + g[2] ** 2)[ii]
    u2 = ui[0] ** 2 + ui[1] ** 2 + ui[2] ** 2
    norms = {
        "rho_Lgamma": float(np.sum(r**params.gamma) * dv) ** (1.0 / params.gamma),
        "sqrt_rho_u_L2": float(np.sqrt(np.sum(r * u2) * dv)),
        "u_W12": float(np.sqrt(np.sum(u2) * dv + np.sum(gu2) * dv)),
        "grad_eps_theta_L2": float(np.sqrt(np.sum(gth2) * dv)),
        "theta_L4": float(np.sum(th**4) * dv) ** 0.25,
        "theta_L9": float(np.sum(th**9) * dv) ** (1.0 / 9.0),
    }
    return DiagnosticsRecord(
        time=state.time,
        mass=mass,
        energy=energy,
        total_entropy=tot_s,
        entropy_production=prod,
        norms=norms,
    )
