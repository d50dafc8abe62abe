"""Relative-entropy machinery connecting the 3D layer to the planar limit.

Provides the x3-constant extension of planar states, the relative-entropy
functional I, the essential/residual decomposition with measured Helmholtz
coercivity constants, and the remainder-term breakdown R1..R11 / K1..K3 whose
rotational parts cancel exactly (R7 + K1 = 0, R8 + K2 = 0).

Time derivatives of the planar reference are obtained by substituting the
planar equations' right-hand sides, not by temporal differencing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import thermo
from .fields import Grid2D, Grid3D, interior, new_field, grad_h, stress_2d, stress_3d, grad_eps
from .gravity import centrifugal_force_3d
from .solver2d import State2D, SolverConfig2D, apply_bc as apply_bc_2d, primitive_tendencies
from .solver3d import State3D, apply_bc as apply_bc_3d

__all__ = [
    "EssentialWindow",
    "RemainderBreakdown",
    "extend_to_3d",
    "relative_entropy_functional",
    "essential_residual_masks",
    "coercivity_report",
    "remainder_terms",
    "remainder_csv_header",
    "remainder_csv_row",
]


@dataclass(frozen=True)
class EssentialWindow:
    """Thresholds rho_lo <= r <= rho_hi, theta_lo <= Theta <= theta_hi for the
    planar reference; the essential set doubles the window on each side."""

    rho_lo: float
    rho_hi: float
    theta_lo: float
    theta_hi: float

    def __post_init__(self):
        if not 0.0 < self.rho_lo <= self.rho_hi:
            raise ValueError("density thresholds must satisfy 0 < rho_lo <= rho_hi")
        if not 0.0 < self.theta_lo <= self.theta_hi:
            raise ValueError("temperature thresholds must satisfy 0 < theta_lo <= theta_hi")

    @classmethod
    def from_state(cls, s2: State2D):
        r = interior(s2.r)
        th = interior(s2.Theta)
        return cls(float(r.min()), float(r.max()), float(th.min()), float(th.max()))

    def widen(self, other: "EssentialWindow"):
        return EssentialWindow(
            min(self.rho_lo, other.rho_lo),
            max(self.rho_hi, other.rho_hi),
            min(self.theta_lo, other.theta_lo),
            max(self.theta_hi, other.theta_hi),
        )


@dataclass
class RemainderBreakdown:
    """Scalar remainder terms at one evaluation time."""

    time: float
    R: list  # R[0] == R1, ..., R[10] == R11
    K: list  # K[0] == K1, K[1] == K2, K[2] == K3
    min_r: float  # smallest planar density entering the 1/r factors of R6

    @property
    def cancellation_R7K1(self):
        return self.R[6] + self.K[0]

    @property
    def cancellation_R8K2(self):
        return self.R[7] + self.K[1]

    @property
    def total(self):
        return sum(self.R)


def extend_to_3d(s2: State2D, grid3: Grid3D) -> State3D:
    """x3-constant extension of a planar state; the vertical velocity is 0."""
    if (grid3.nx, grid3.ny) != interior(s2.r).shape:
        raise ValueError("3D grid does not match the planar state horizontally")
    apply_bc_2d(s2)
    nzg = grid3.nz + 4
    s3 = State3D(
        np.repeat(s2.r[:, :, None], nzg, axis=2),
        np.stack(
            [
                np.repeat(s2.V[0][:, :, None], nzg, axis=2),
                np.repeat(s2.V[1][:, :, None], nzg, axis=2),
                np.zeros(s2.r.shape + (nzg,)),
            ]
        ),
        np.repeat(s2.Theta[:, :, None], nzg, axis=2),
        s2.time,
    )
    apply_bc_3d(s3)
    return s3


def relative_entropy_functional(s3: State3D, s2: State2D, grid3: Grid3D, params,
                                parts: bool = False):
    """I = integral of 1/2 rho |u - U|^2 + E(rho, theta | r, Theta) over the layer."""
    ref = extend_to_3d(s2, grid3)
    rho = interior(s3.rho)
    th = interior(s3.theta)
    r = interior(ref.rho)
    Th = interior(ref.theta)
    du2 = sum((interior(s3.u[c]) - interior(ref.u[c])) ** 2 for c in range(3))
    kin = 0.5 * rho * du2
    ent = thermo.relative_entropy_density(params, rho, th, r, Th)
    dv = grid3.cell_vol
    kin_tot = float(np.sum(kin)) * dv
    ent_tot = float(np.sum(ent)) * dv
    if parts:
        return kin_tot + ent_tot, kin_tot, ent_tot
    return kin_tot + ent_tot


def essential_residual_masks(s3: State3D, w: EssentialWindow):
    """Pointwise partition of the interior cells: doubled window vs complement."""
    rho = interior(s3.rho)
    th = interior(s3.theta)
    ess = (
        (rho >= 0.5 * w.rho_lo)
        & (rho <= 2.0 * w.rho_hi)
        & (th >= 0.5 * w.theta_lo)
        & (th <= 2.0 * w.theta_hi)
    )
    return ess, ~ess


def coercivity_report(params, w: EssentialWindow, n_state: int = 24, n_ref: int = 8):
    """Measured Helmholtz coercivity constants on a (rho, theta) lattice.

    C1, C2: two-sided quadratic bounds of E(rho, theta | r, Theta) on the
    essential set, uniformly over references inside the window.  C3: infimum
    of E on the residual set.  C4: infimum of E / (rho e + rho |s|) there.
    """
    r_ref = np.linspace(w.rho_lo, w.rho_hi, n_ref)
    t_ref = np.linspace(w.theta_lo, w.theta_hi, n_ref)

    margin = 1e-3
    rho_ess = np.linspace(0.5 * w.rho_lo, 2.0 * w.rho_hi, n_state)
    th_ess = np.linspace(0.5 * w.theta_lo, 2.0 * w.theta_hi, n_state)
    rho_res = np.concatenate(
        [
            np.geomspace(1e-6 * w.rho_lo, 0.5 * w.rho_lo * (1 - margin), n_state),
            np.geomspace(2.0 * w.rho_hi * (1 + margin), 1e3 * w.rho_hi, n_state),
        ]
    )
    th_res = np.concatenate(
        [
            np.geomspace(1e-6 * w.theta_lo, 0.5 * w.theta_lo * (1 - margin), n_state),
            np.geomspace(2.0 * w.theta_hi * (1 + margin), 1e3 * w.theta_hi, n_state),
        ]
    )

    RR, TT = np.meshgrid(r_ref, t_ref, indexing="ij")
    RR = RR.ravel()[:, None, None]
    TT = TT.ravel()[:, None, None]

    def ent(rho2, th2):
        return thermo.relative_entropy_density(
            params, rho2[None, :, :], th2[None, :, :], RR, TT
        )

    # essential: ratio E / quadratic deviation, skipping near-coincident points
    RE, TE = np.meshgrid(rho_ess, th_ess, indexing="ij")
    E = ent(RE, TE)
    q = (RE[None] - RR) ** 2 + (TE[None] - TT) ** 2
    keep = q > 1e-8
    ratio = E[keep] / q[keep]
    C1 = float(np.min(ratio))
    C2 = float(np.max(ratio))

    # residual: any state with rho or theta outside the doubled window
    rho_all = np.concatenate([rho_res, rho_ess])
    th_all = np.concatenate([th_res, th_ess])
    RA, TA = np.meshgrid(rho_all, th_all, indexing="ij")
    out = (
        (RA < 0.5 * w.rho_lo)
        | (RA > 2.0 * w.rho_hi)
        | (TA < 0.5 * w.theta_lo)
        | (TA > 2.0 * w.theta_hi)
    )
    E = ent(RA, TA)
    Eres = E[:, out]
    C3 = float(np.min(Eres))
    e = thermo.internal_energy(params, RA, TA)
    s = thermo.entropy(params, RA, TA)
    weight = (RA * e + RA * np.abs(s))[out]
    C4 = float(np.min(Eres / weight[None, :]))
    ok = C1 > 0.0 and C3 > 0.0 and C4 > 0.0
    return {"C1": C1, "C2": C2, "C3": C3, "C4": C4, "positive": ok}


def _broadcast_z(f2, nz):
    """Interior 2D array -> interior 3D array constant in x3."""
    return np.broadcast_to(f2[:, :, None], f2.shape + (nz,))


def remainder_terms(s3: State3D, s2: State2D, grid3: Grid3D, cfg2: SolverConfig2D,
                    E=None, gphi=None, dt_fields=None) -> RemainderBreakdown:
    """Discrete quadrature of the remainder terms R1..R11 and K1..K3.

    ``E`` is the 3D gravity field on interior cells (None = no gravity term),
    ``gphi`` the planar potential gradient entering K3.  ``dt_fields`` may
    supply (d_t r, d_t V, d_t Theta) explicitly (e.g. for synthetic states);
    by default they are taken from the planar equations' right-hand sides.
    """
    params = cfg2.thermo
    grid2 = grid3.horizontal
    nz = grid3.nz
    dv = grid3.cell_vol
    apply_bc_2d(s2)
    apply_bc_3d(s3)

    rho = interior(s3.rho)
    th = interior(s3.theta)
    u = [interior(s3.u[c]) for c in range(3)]

    r2 = interior(s2.r)
    Th2 = interior(s2.Theta)
    V2 = [interior(s2.V[c]) for c in range(2)]
    r = _broadcast_z(r2, nz)
    Th = _broadcast_z(Th2, nz)
    U = [_broadcast_z(V2[0], nz), _broadcast_z(V2[1], nz), np.zeros_like(rho)]
    dU = [U[c] - u[c] for c in range(3)]  # U - u

    # horizontal gradients of the planar reference (interior, then extended)
    gV = [grad_h(s2.V[c], grid2)[:, 1:-1, 1:-1] for c in range(2)]
    gTh2 = grad_h(s2.Theta, grid2)[:, 1:-1, 1:-1]
    gTh = [_broadcast_z(gTh2[0], nz), _broadcast_z(gTh2[1], nz)]

    def quad(f):
        return float(np.sum(f)) * dv

    # R1: rho (u - U) . grad_eps U . (U - u); grad U has zero third column/row
    R1 = 0.0
    for i in range(2):
        for j in range(2):
            R1 += quad(rho * (-dU[i]) * _broadcast_z(gV[i][j], nz) * dU[j])

    s_eps = thermo.entropy(params, rho, th)
    s_ref = thermo.entropy(params, r, Th)
    ds = s_eps - s_ref

    # R2: rho (s - s~) (U - u) . grad_eps Theta (vertical component zero)
    R2 = quad(rho * ds * (dU[0] * gTh[0] + dU[1] * gTh[1]))

    # planar time derivatives from the planar equations
    if dt_fields is None:
        dt_r2, dt_V2, dt_Th2 = primitive_tendencies(s2, grid2, cfg2, gphi)
    else:
        dt_r2, dt_V2, dt_Th2 = dt_fields
    dt_V = [_broadcast_z(dt_V2[c], nz) for c in range(2)]
    dt_Th = _broadcast_z(dt_Th2, nz)
    dt_r = _broadcast_z(dt_r2, nz)

    # R3: rho (d_t U + U . grad_h U) . (U - u)
    R3 = 0.0
    for i in range(2):
        adv = U[0] * _broadcast_z(gV[i][0], nz) + U[1] * _broadcast_z(gV[i][1], nz)
        R3 += quad(rho * (dt_V[i] + adv) * dU[i])

    R4 = -quad(rho * ds * dt_Th)
    R5 = -quad(rho * ds * (U[0] * gTh[0] + U[1] * gTh[1]))

    # R6: (1 - rho/r) d_t p(r, Theta) - (rho/r) u . grad_eps p(r, Theta)
    p_r = thermo.dp_drho(params, r2, Th2)
    p_t = thermo.dp_dtheta(params, r2, Th2)
    dt_p2 = p_r * dt_r2 + p_t * dt_Th2
    pref2_g = thermo.pressure(params, s2.r, s2.Theta)  # ghosted
    gp2 = grad_h(pref2_g, grid2)[:, 1:-1, 1:-1]
    dt_p = _broadcast_z(dt_p2, nz)
    gp = [_broadcast_z(gp2[0], nz), _broadcast_z(gp2[1], nz)]
    min_r = float(r2.min())
    R6 = quad((1.0 - rho / r) * dt_p - (rho / r) * (u[0] * gp[0] + u[1] * gp[1]))

    # rotation and centrifugal pair (chi x u = chi (-u2, u1, 0))
    chi = cfg2.gravity.chi if cfg2.gravity is not None else 0.0
    R7 = quad(rho * chi * (-u[1] * dU[0] + u[0] * dU[1]))
    K1 = -quad(rho * chi * (-U[1] * dU[0] + U[0] * dU[1]))
    cen = centrifugal_force_3d(chi, grid3)
    cen_dot = cen[0] * dU[0] + cen[1] * dU[1]
    R8 = -quad(rho * cen_dot)
    K2 = quad(rho * cen_dot)

    # gravity pair
    if E is not None and cfg2.gravity is not None:
        scale = grid3.eps ** (-2.0 * cfg2.gravity.beta)
        R9 = -quad(scale * rho * (E[0] * dU[0] + E[1] * dU[1] + E[2] * dU[2]))
    else:
        R9 = 0.0
    if gphi is not None:
        K3 = quad(rho * (_broadcast_z(gphi[0], nz) * dU[0] + _broadcast_z(gphi[1], nz) * dU[1]))
    else:
        K3 = 0.0

    # R10: -(q / theta) . grad_eps Theta = kappa grad_eps theta . grad_eps Theta / theta
    kap = thermo.conductivity(params, th)
    gth3 = grad_eps(s3.theta, grid3)
    ii = (slice(1, -1),) * 3
    R10 = quad(kap * (gth3[0][ii] * gTh[0] + gth3[1][ii] * gTh[1]) / th)

    # R11: -(p(rho, theta) div_h V - S(theta, grad_eps u) : grad_eps U)
    p3 = thermo.pressure(params, rho, th)
    divV2 = gV[0][0] + gV[1][1]
    mu3 = thermo.viscosity(params, s3.theta[1:-1, 1:-1, 1:-1])
    S3 = stress_3d(mu3, s3.u, grid3)
    SU = 0.0
    for i in range(2):
        for j in range(2):
            SU = SU + S3[i, j][ii] * _broadcast_z(gV[i][j], nz)
    R11 = -quad(p3 * _broadcast_z(divV2, nz) - SU)

    return RemainderBreakdown(
        time=s3.time,
        R=[R1, R2, R3, R4, R5, R6, R7, R8, R9, R10, R11],
        K=[K1, K2, K3],
        min_r=min_r,
    )


def remainder_csv_header():
    cols = ["t", "I", "I_kinetic", "I_entropy", "residual_volume"]
    cols += [f"R{j}" for j in range(1, 12)]
    cols += ["K1", "K2", "K3", "min_r"]
    return ",".join(cols)


def remainder_csv_row(t, I, kin, ent, res_vol, rb: RemainderBreakdown):
    vals = [t, I, kin, ent, res_vol] + list(rb.R) + list(rb.K) + [rb.min_r]
    return ",".join(format(v, ".12e") for v in vals)
