"""Finite-volume integrator for the planar limit system on omega.

Same discretization choices as the 3D solver (central-slope reconstruction,
Rusanov fluxes, centered diffusion, SSP-RK2, internal-energy thermal form) on
the horizontal domain only, with no-slip walls on all of the boundary.
Gravity enters through the vertically-integrated potential: the
principal-value gradient of the self-interaction kernel when alpha = 1, or
the external-body potential gradient when alpha = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import thermo
from .fields import (
    NG,
    Grid2D,
    apply_scalar_bc_2d,
    apply_velocity_bc_2d,
    interior,
    new_field,
    stress_2d,
    grad_h,
    _dx,
    _dy,
)
from .gravity import (
    GravityConfig,
    ExternalDensity,
    vp_gradient_2d,
    external_gradient_2d,
    centrifugal_force_2d,
)
from .solver3d import invert_temperature

__all__ = ["State2D", "SolverConfig2D", "Simulation2D", "primitive_tendencies"]


@dataclass
class State2D:
    """Ghosted primitive fields (r, V, Theta) on a Grid2D."""

    r: np.ndarray
    V: np.ndarray  # shape (2, ...) ghosted
    Theta: np.ndarray
    time: float = 0.0

    @classmethod
    def uniform(cls, grid: Grid2D, r=1.0, Theta=1.0):
        s = cls(new_field(grid), new_field(grid, 2), new_field(grid))
        s.r[...] = r
        s.Theta[...] = Theta
        return s

    def copy(self):
        return State2D(self.r.copy(), self.V.copy(), self.Theta.copy(), self.time)


@dataclass
class SolverConfig2D:
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


def apply_bc(state: State2D):
    apply_scalar_bc_2d(state.r, even=True)
    apply_scalar_bc_2d(state.Theta, even=True)
    apply_velocity_bc_2d(state.V)


def _face_states(q, axis):
    """Left/right linear reconstructions at interior+wall interfaces."""
    lo = [slice(None)] * q.ndim
    hi = [slice(None)] * q.ndim
    mid = [slice(None)] * q.ndim
    lo[axis] = slice(None, -2)
    hi[axis] = slice(2, None)
    mid[axis] = slice(1, -1)
    m = q[tuple(mid)]
    s = (q[tuple(hi)] - q[tuple(lo)]) / 4.0
    sel = [slice(NG, -NG)] * q.ndim
    sel[axis] = slice(None)
    m, s = m[tuple(sel)], s[tuple(sel)]
    left = [slice(None)] * q.ndim
    right = [slice(None)] * q.ndim
    left[axis] = slice(0, -1)
    right[axis] = slice(1, None)
    return m[tuple(left)] + s[tuple(left)], m[tuple(right)] - s[tuple(right)]


def _flux_divergence(state: State2D, grid: Grid2D, params):
    r, V, th = state.r, state.V, state.Theta
    h = (grid.hx, grid.hy)
    tend = [0.0] * 4
    for axis in range(2):
        rL, rR = _face_states(r, axis)
        tL, tR = _face_states(th, axis)
        rL, rR = np.maximum(rL, 1e-12), np.maximum(rR, 1e-12)
        tL, tR = np.maximum(tL, 1e-12), np.maximum(tR, 1e-12)
        uL = [None, None]
        uR = [None, None]
        for c in range(2):
            uL[c], uR[c] = _face_states(V[c], axis)
        pL = thermo.pressure(params, rL, tL)
        pR = thermo.pressure(params, rR, tR)
        eL = thermo.internal_energy(params, rL, tL)
        eR = thermo.internal_energy(params, rR, tR)
        lam = np.maximum(
            np.abs(uL[axis]) + thermo.sound_speed(params, rL, tL),
            np.abs(uR[axis]) + thermo.sound_speed(params, rR, tR),
        )
        QL = [rL, rL * uL[0], rL * uL[1], rL * eL]
        QR = [rR, rR * uR[0], rR * uR[1], rR * eR]
        FL = [uL[axis] * q for q in QL]
        FR = [uR[axis] * q for q in QR]
        FL[1 + axis] = FL[1 + axis] + pL
        FR[1 + axis] = FR[1 + axis] + pR
        lo = [slice(None)] * 2
        hi = [slice(None)] * 2
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        for k in range(4):
            F = 0.5 * (FL[k] + FR[k]) - 0.5 * lam * (QR[k] - QL[k])
            tend[k] = tend[k] - (F[tuple(hi)] - F[tuple(lo)]) / h[axis]
    return tend


def rhs(state: State2D, grid: Grid2D, cfg: SolverConfig2D, gphi=None, mms=None):
    """Tendencies for (r, rV1, rV2, r*e) on the interior cells.

    ``gphi`` is the gravitational potential gradient on the interior cells.
    """
    params = cfg.thermo
    apply_bc(state)
    r, V, th = state.r, state.V, state.Theta

    d_r, d_m1, d_m2, d_re = _flux_divergence(state, grid, params)
    d_m = [d_m1, d_m2]

    mu1 = thermo.viscosity(params, th[1:-1, 1:-1])
    S = stress_2d(mu1, V, grid)
    for i in range(2):
        d_m[i] = d_m[i] + _dx(S[i, 0], grid.hx) + _dy(S[i, 1], grid.hy)

    kap1 = thermo.conductivity(params, th[1:-1, 1:-1])
    gth = grad_h(th, grid)
    d_re = d_re + _dx(kap1 * gth[0], grid.hx) + _dy(kap1 * gth[1], grid.hy)

    G = np.stack([grad_h(V[i], grid) for i in range(2)])
    SdotG = np.einsum("ij...,ij...->...", S, G)
    divV = G[0, 0] + G[1, 1]
    ii = (slice(1, -1), slice(1, -1))
    p_int = thermo.pressure(params, interior(r), interior(th))
    d_re = d_re + SdotG[ii] - p_int * divV[ii]

    ri = interior(r)
    Vi = [interior(V[c]) for c in range(2)]
    chi = cfg.gravity.chi if cfg.gravity is not None else 0.0
    if chi != 0.0:
        d_m[0] = d_m[0] + ri * chi * Vi[1]
        d_m[1] = d_m[1] - ri * chi * Vi[0]
        cen = centrifugal_force_2d(chi, grid)
        d_m[0] = d_m[0] + ri * cen[0]
        d_m[1] = d_m[1] + ri * cen[1]
    if gphi is not None:
        d_m[0] = d_m[0] + ri * gphi[0]
        d_m[1] = d_m[1] + ri * gphi[1]

    out = [d_r, d_m[0], d_m[1], d_re]
    if mms is not None:
        out = [a + b for a, b in zip(out, mms)]
    return out


def primitive_tendencies(state: State2D, grid: Grid2D, cfg: SolverConfig2D, gphi=None):
    """Time derivatives (d_t r, d_t V, d_t Theta) implied by the equations.

    Converts the conserved-variable tendencies through the chain rule; used by
    the relative-entropy remainder evaluation, which needs the limit-system
    time derivatives at a single instant.
    """
    params = cfg.thermo
    t = rhs(state, grid, cfg, gphi)
    ri = interior(state.r)
    Vi = [interior(state.V[c]) for c in range(2)]
    thi = interior(state.Theta)
    dt_r = t[0]
    dt_V = [(t[1 + c] - Vi[c] * dt_r) / ri for c in range(2)]
    e = thermo.internal_energy(params, ri, thi)
    e_r = thermo.de_drho(params, ri, thi)
    e_t = thermo.de_dtheta(params, ri, thi)
    dt_Theta = (t[3] - (e + ri * e_r) * dt_r) / (ri * e_t)
    return dt_r, np.stack(dt_V), dt_Theta


def stable_dt(state: State2D, grid: Grid2D, cfg: SolverConfig2D):
    params = cfg.thermo
    ri = np.maximum(interior(state.r), 1e-12)
    ti = interior(state.Theta)
    Vi = [interior(state.V[c]) for c in range(2)]
    c = thermo.sound_speed(params, ri, ti)
    dif = thermo.viscosity(params, ti) / ri + thermo.conductivity(params, ti) / (
        ri * thermo.de_dtheta(params, ri, ti)
    )
    rate = (
        (np.abs(Vi[0]) + c) / grid.hx
        + (np.abs(Vi[1]) + c) / grid.hy
        + 2.0 * dif * (1.0 / grid.hx**2 + 1.0 / grid.hy**2)
    )
    dt = cfg.cfl / float(np.max(rate))
    if dt < 1e-12:
        raise RuntimeError("time step underflow")
    return dt


class Simulation2D:
    """Owns a State2D and advances it with periodic gravity refreshes."""

    def __init__(self, grid: Grid2D, cfg: SolverConfig2D, state: State2D):
        self.grid = grid
        self.cfg = cfg
        self.state = state
        self.gphi = None
        self._gext = None
        self._steps_since_gravity = None
        self.floored_theta = 0
        self.floored_rho = 0
        self.nsteps = 0

    def refresh_gravity(self):
        cfg = self.cfg
        if cfg.gravity is None:
            self.gphi = None
            return
        if cfg.gravity.alpha == 1:
            self.gphi = vp_gradient_2d(interior(self.state.r), self.grid, cfg.gravity.G_const)
            self._steps_since_gravity = 0
        else:
            if self._gext is None:
                if cfg.g_ext is None:
                    raise ValueError("alpha = 0 requires an external density")
                self._gext = external_gradient_2d(cfg.g_ext, self.grid, cfg.gravity.G_const)
            self.gphi = self._gext

    def step(self, dt=None, mms=None):
        grid, cfg, s = self.grid, self.cfg, self.state
        apply_bc(s)
        if cfg.gravity is not None:
            if self.gphi is None or (
                cfg.gravity.alpha == 1
                and self._steps_since_gravity is not None
                and self._steps_since_gravity >= cfg.gravity_stride
            ):
                self.refresh_gravity()
        if dt is None:
            dt = stable_dt(s, grid, cfg)
        params = cfg.thermo

        def conserved(st):
            r = interior(st.r)
            e = thermo.internal_energy(params, r, interior(st.Theta))
            return r.copy(), [r * interior(st.V[c]) for c in range(2)], r * e

        def advance(st, r, m, re):
            src = None if mms is None else mms(st.time)
            t = rhs(st, grid, cfg, self.gphi, src)
            return r + dt * t[0], [m[c] + dt * t[1 + c] for c in range(2)], re + dt * t[3]

        def to_state(dst, r, m, re, guess):
            low_r = r < 1e-12
            self.floored_rho += int(np.count_nonzero(low_r))
            r = np.maximum(r, 1e-12)
            th = invert_temperature(params, r, re / r, guess, floor=cfg.theta_floor)
            self.floored_theta += int(np.count_nonzero(th <= cfg.theta_floor))
            interior(dst.r)[...] = r
            for c in range(2):
                interior(dst.V[c])[...] = m[c] / r
            interior(dst.Theta)[...] = th
            apply_bc(dst)

        r0, m0, re0 = conserved(s)
        r1, m1, re1 = advance(s, r0, m0, re0)
        s1 = s.copy()
        s1.time = s.time + dt
        to_state(s1, r1, m1, re1, interior(s.Theta))
        r2, m2, re2 = advance(s1, r1, m1, re1)
        to_state(
            s,
            0.5 * (r0 + r2),
            [0.5 * (m0[c] + m2[c]) for c in range(2)],
            0.5 * (re0 + re2),
            interior(s1.Theta),
        )
        s.time += dt
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
        budget = self.cfg.max_floor_fraction * self.grid.nx * self.grid.ny * max(1, self.nsteps)
        return (self.floored_theta + self.floored_rho) > budget

    def diagnostics(self):
        """Mass, energy, entropy and the planar momentum-balance residual."""
        grid, cfg, s = self.grid, self.cfg, self.state
        params = cfg.thermo
        apply_bc(s)
        da = grid.cell_area
        r = interior(s.r)
        th = interior(s.Theta)
        Vi = [interior(s.V[c]) for c in range(2)]
        e = thermo.internal_energy(params, r, th)
        mass = float(np.sum(r)) * da
        energy = float(np.sum(0.5 * r * (Vi[0] ** 2 + Vi[1] ** 2) + r * e)) * da
        tot_s = float(np.sum(r * thermo.entropy(params, r, th))) * da
        dt_r, dt_V, _ = primitive_tendencies(s, grid, cfg, self.gphi)
        resid = float(np.max(np.abs(r * dt_V)))
        return {
            "time": s.time,
            "mass": mass,
            "energy": energy,
            "total_entropy": tot_s,
            "momentum_residual": resid,
        }
