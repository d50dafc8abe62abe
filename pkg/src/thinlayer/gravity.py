"""Newtonian force integrals on the thin layer, their 2D limits and the
associated limit diagnostics.

All kernels use the attractive orientation: the acceleration at a probe x
produced by mass at y points from x toward y.  The scaled self-interaction
field E1 and external field E2 follow the thin-layer kernel

    E1(x) = G sum_y rho(y) (y_h - x_h, eps (y3 - x3)) / d_eps(x, y)^3 dV,
    d_eps^2 = |x_h - y_h|^2 + eps^2 (x3 - y3)^2,

with the combined field E = eps * alpha * E1 + (1 - alpha) * E2.  The solver
applies the momentum forcing eps^(-2 beta) rho E.

Quadrature is the cell-midpoint rule; the self-cell contribution vanishes by
the oddness of the kernel over a centered cell (the 4x4x4 subdivision sums to
zero exactly), so the self cell is skipped.  Direct O(N^2) summation is the
reference path; an FFT convolution path produces the identical midpoint sum
via zero-padded convolution and is used for large grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .fields import Grid2D, Grid3D

__all__ = [
    "GravityConfig",
    "ExternalDensity",
    "force_3d",
    "self_field_3d",
    "external_field_3d",
    "potential_2d_self",
    "vp_gradient_2d",
    "potential_2d_external",
    "external_gradient_2d",
    "check_l0",
    "limit_errors",
    "centrifugal_force_2d",
    "centrifugal_force_3d",
]

_REGIMES = {(0, 0.0), (1, 0.5)}


@dataclass(frozen=True)
class GravityConfig:
    """Gravity regime: (alpha, beta) in {(0, 0), (1, 1/2)}."""

    alpha: int = 1
    beta: float = 0.5
    G_const: float = 1.0
    chi: float = 0.0

    def __post_init__(self):
        if (self.alpha, self.beta) not in _REGIMES:
            raise ValueError("regime must be (alpha, beta) = (0, 0) or (1, 1/2)")


@dataclass(frozen=True)
class ExternalDensity:
    """Nonnegative compactly supported source on a 3D lattice.

    ``xs``, ``ys``, ``zs`` are 1D point coordinate arrays; ``values`` has shape
    (len(xs), len(ys), len(zs)); ``dv`` is the lattice cell volume.
    """

    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray
    values: np.ndarray
    dv: float

    def __post_init__(self):
        if np.any(self.values < 0.0):
            raise ValueError("external density must be nonnegative")
        if self.values.shape != (len(self.xs), len(self.ys), len(self.zs)):
            raise ValueError("lattice shape mismatch")

    @classmethod
    def gaussian(cls, center=(0.5, 0.5), n: int = 17, radius: float = 4.0,
                 z_off: float = 5.0):
        """Even pair of Gaussian blobs straddling the fluid plane:
        g(y) = exp(-|y_h - c|^2 - (|y3| - z_off)^2), truncated at distance
        ``radius`` from the blob centers (c, +-z_off).

        The lattice is symmetric about y3 = 0, so g is even in y3 and the
        vertical-force condition holds by symmetry.  With z_off > radius the
        support stays clear of the fluid plane, so the induced field is
        smooth there.
        """
        if z_off <= radius:
            raise ValueError("z_off must exceed the truncation radius")
        cx, cy = center
        xs = np.linspace(cx - radius, cx + radius, n)
        ys = np.linspace(cy - radius, cy + radius, n)
        zu = np.linspace(z_off - radius, z_off + radius, n)
        zs = np.concatenate([-zu[::-1], zu])
        X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
        r2 = (X - cx) ** 2 + (Y - cy) ** 2 + (np.abs(Z) - z_off) ** 2
        vals = np.where(r2 <= radius**2, np.exp(-r2), 0.0)
        h = xs[1] - xs[0]
        return cls(xs=xs, ys=ys, zs=zs, values=vals, dv=h**3)

    def points(self):
        X, Y, Z = np.meshgrid(self.xs, self.ys, self.zs, indexing="ij")
        return X.ravel(), Y.ravel(), Z.ravel(), self.values.ravel()


# ---------------------------------------------------------------------------
# Self-interaction field E1
# ---------------------------------------------------------------------------

def _self_field_direct(rho, grid: Grid3D, G: float, chunk: int = 512):
    xs, ys, zs = grid.centers()
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    px, py, pz = X.ravel(), Y.ravel(), Z.ravel()
    w = rho.ravel() * grid.cell_vol
    eps = grid.eps
    out = np.zeros((3, px.size))
    for i0 in range(0, px.size, chunk):
        sl = slice(i0, min(i0 + chunk, px.size))
        dx = px[None, :] - px[sl, None]
        dy = py[None, :] - py[sl, None]
        dz = pz[None, :] - pz[sl, None]
        d2 = dx**2 + dy**2 + (eps * dz) ** 2
        np.fill_diagonal(d2[:, sl], 1.0)  # self-cell: kernel odd, contributes 0
        inv = d2 ** (-1.5)
        np.fill_diagonal(inv[:, sl], 0.0)
        out[0, sl] = (inv * dx) @ w
        out[1, sl] = (inv * dy) @ w
        out[2, sl] = eps * (inv * dz) @ w
    return (G * out).reshape((3,) + rho.shape)


def _kernel_offsets_3d(grid: Grid3D):
    ox = np.arange(-(grid.nx - 1), grid.nx) * grid.hx
    oy = np.arange(-(grid.ny - 1), grid.ny) * grid.hy
    oz = np.arange(-(grid.nz - 1), grid.nz) * grid.hz
    DX, DY, DZ = np.meshgrid(ox, oy, oz, indexing="ij")
    d2 = DX**2 + DY**2 + (grid.eps * DZ) ** 2
    c = (grid.nx - 1, grid.ny - 1, grid.nz - 1)
    d2[c] = 1.0
    inv = d2 ** (-1.5)
    inv[c] = 0.0
    return DX * inv, DY * inv, grid.eps * DZ * inv


def _self_field_fft(rho, grid: Grid3D, G: float):
    kx, ky, kz = _kernel_offsets_3d(grid)
    w = rho * grid.cell_vol
    # E(x) = sum_y w(y) k(y - x): convolution of w with the reflected kernel -k.
    out = [fftconvolve(w, -k, mode="same") for k in (kx, ky, kz)]
    return G * np.stack(out)


def self_field_3d(rho, grid: Grid3D, G: float = 1.0, method: str = "auto"):
    """E1 on the interior cells (rho given without ghosts)."""
    if rho.shape != (grid.nx, grid.ny, grid.nz):
        raise ValueError("density shape does not match the grid")
    if method == "auto":
        method = "fft" if rho.size > 4096 else "direct"
    if method == "direct":
        return _self_field_direct(rho, grid, G)
    if method == "fft":
        return _self_field_fft(rho, grid, G)
    raise ValueError(f"unknown method {method!r}")


def external_field_3d(g: ExternalDensity, grid: Grid3D, G: float = 1.0, chunk: int = 2048):
    """E2 on the interior cells: kernel (y_h - x_h, y3 - eps x3)."""
    gx, gy, gz, gv = g.points()
    keep = gv > 0.0
    gx, gy, gz, gv = gx[keep], gy[keep], gz[keep], gv[keep]
    xs, ys, zs = grid.centers()
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    px, py, pz = X.ravel(), Y.ravel(), grid.eps * Z.ravel()
    w = gv * g.dv
    out = np.zeros((3, px.size))
    if gx.size == 0:
        return out.reshape((3, grid.nx, grid.ny, grid.nz))
    for i0 in range(0, px.size, chunk):
        sl = slice(i0, min(i0 + chunk, px.size))
        dx = gx[None, :] - px[sl, None]
        dy = gy[None, :] - py[sl, None]
        dz = gz[None, :] - pz[sl, None]
        inv = (dx**2 + dy**2 + dz**2) ** (-1.5)
        out[0, sl] = (inv * dx) @ w
        out[1, sl] = (inv * dy) @ w
        out[2, sl] = (inv * dz) @ w
    return (G * out).reshape((3, grid.nx, grid.ny, grid.nz))


def force_3d(rho, g: ExternalDensity | None, cfg: GravityConfig, grid: Grid3D,
             method: str = "auto", E2=None):
    """Combined field E = eps*alpha*E1 + (1-alpha)*E2 on interior cells.

    ``E2`` may be passed precomputed (it is independent of the fluid state).
    """
    if cfg.alpha == 1:
        return grid.eps * self_field_3d(rho, grid, cfg.G_const, method)
    if E2 is None:
        if g is None:
            raise ValueError("alpha = 0 requires an external density")
        E2 = external_field_3d(g, grid, cfg.G_const)
    return E2


# ---------------------------------------------------------------------------
# 2D limit potentials
# ---------------------------------------------------------------------------

def _self_cell_potential(grid: Grid2D, nsub: int = 4):
    """Midpoint integral of 1/|d| over the centered cell, via subdivision."""
    sx = (np.arange(nsub) + 0.5) / nsub * grid.hx - grid.hx / 2.0
    sy = (np.arange(nsub) + 0.5) / nsub * grid.hy - grid.hy / 2.0
    SX, SY = np.meshgrid(sx, sy, indexing="ij")
    return np.sum(1.0 / np.hypot(SX, SY)) * grid.cell_area / nsub**2


def potential_2d_self(r, grid: Grid2D, G: float = 1.0):
    """phi_h(x) = G sum_y r(y) / |x - y| dA with subdivided self-cell."""
    if np.any(r <= 0.0):
        raise ValueError("2D density must be strictly positive")
    if r.shape != (grid.nx, grid.ny):
        raise ValueError("density shape does not match the grid")
    ox = np.arange(-(grid.nx - 1), grid.nx) * grid.hx
    oy = np.arange(-(grid.ny - 1), grid.ny) * grid.hy
    DX, DY = np.meshgrid(ox, oy, indexing="ij")
    d = np.hypot(DX, DY)
    c = (grid.nx - 1, grid.ny - 1)
    d[c] = 1.0
    k = grid.cell_area / d
    k[c] = _self_cell_potential(grid)
    return G * fftconvolve(r, k, mode="same")


def vp_gradient_2d(r, grid: Grid2D, G: float = 1.0):
    """Principal-value gradient of the self potential.

    grad phi_h(x) = G vp-sum_{y != x} r(y) (y - x) / |y - x|^3 dA; excluding
    the self cell realizes the symmetric-exclusion principal value exactly on
    a uniform grid.
    """
    if r.shape != (grid.nx, grid.ny):
        raise ValueError("density shape does not match the grid")
    ox = np.arange(-(grid.nx - 1), grid.nx) * grid.hx
    oy = np.arange(-(grid.ny - 1), grid.ny) * grid.hy
    DX, DY = np.meshgrid(ox, oy, indexing="ij")
    d2 = DX**2 + DY**2
    c = (grid.nx - 1, grid.ny - 1)
    d2[c] = 1.0
    inv = d2 ** (-1.5) * grid.cell_area
    inv[c] = 0.0
    # sum_y r(y) k(y - x) is a correlation: convolve with the point-reflected kernel.
    gx = G * fftconvolve(r, (DX * inv)[::-1, ::-1], mode="same")
    gy = G * fftconvolve(r, (DY * inv)[::-1, ::-1], mode="same")
    return np.stack([gx, gy])


def potential_2d_external(g: ExternalDensity, grid: Grid2D, G: float = 1.0):
    """phi_h(x_h) = G sum_y g(y) / sqrt(|x_h - y_h|^2 + y3^2) dv."""
    gx, gy, gz, gv = g.points()
    keep = gv > 0.0
    if not np.any(keep):
        return np.zeros((grid.nx, grid.ny))
    gx, gy, gz, gv = gx[keep], gy[keep], gz[keep], gv[keep]
    X, Y = grid.mesh()
    px, py = X.ravel(), Y.ravel()
    d = np.sqrt(
        (px[:, None] - gx[None, :]) ** 2
        + (py[:, None] - gy[None, :]) ** 2
        + gz[None, :] ** 2
    )
    phi = (1.0 / d) @ (gv * g.dv)
    return G * phi.reshape(grid.nx, grid.ny)


def external_gradient_2d(g: ExternalDensity, grid: Grid2D, G: float = 1.0):
    """Horizontal gradient of the external 2D potential (attractive)."""
    gx, gy, gz, gv = g.points()
    keep = gv > 0.0
    if not np.any(keep):
        return np.zeros((2, grid.nx, grid.ny))
    gx, gy, gz, gv = gx[keep], gy[keep], gz[keep], gv[keep]
    X, Y = grid.mesh()
    px, py = X.ravel(), Y.ravel()
    dx = gx[None, :] - px[:, None]
    dy = gy[None, :] - py[:, None]
    inv = (dx**2 + dy**2 + gz[None, :] ** 2) ** (-1.5)
    w = gv * g.dv
    out = np.stack([(inv * dx) @ w, (inv * dy) @ w])
    return (G * out).reshape(2, grid.nx, grid.ny)


def check_l0(g: ExternalDensity, probes):
    """Max over probes of |integral g(y) y3 / (|x_h - y_h|^2 + y3^2)^(3/2) dy|."""
    gx, gy, gz, gv = g.points()
    worst = 0.0
    for xh in probes:
        d2 = (gx - xh[0]) ** 2 + (gy - xh[1]) ** 2 + gz**2
        # in-plane points (gz = 0) contribute nothing; guard the singular ones
        mask = d2 > 0.0
        val = np.sum(gv[mask] * gz[mask] * d2[mask] ** (-1.5)) * g.dv
        worst = max(worst, abs(val))
    return worst


# ---------------------------------------------------------------------------
# Limit diagnostics (G1), (G3), (G4)
# ---------------------------------------------------------------------------

def _bilinear_at(r2d, grid2: Grid2D, x: float, y: float):
    """Bilinear interpolation of a cell-centered field at an arbitrary point."""
    xs, ys = grid2.centers()
    fx = np.clip((x - xs[0]) / grid2.hx, 0.0, grid2.nx - 1.0)
    fy = np.clip((y - ys[0]) / grid2.hy, 0.0, grid2.ny - 1.0)
    i0 = min(int(fx), grid2.nx - 2)
    j0 = min(int(fy), grid2.ny - 2)
    tx, ty = fx - i0, fy - j0
    return float(
        (1 - tx) * (1 - ty) * r2d[i0, j0]
        + tx * (1 - ty) * r2d[i0 + 1, j0]
        + (1 - tx) * ty * r2d[i0, j0 + 1]
        + tx * ty * r2d[i0 + 1, j0 + 1]
    )


def _vertical_kernel_integral(r2d, grid2: Grid2D, eps: float, probe, G: float):
    """Vertical self-field component at a probe, with the layer integral taken
    in closed form:

        J(eps) = G sum_y r(y_h) int_0^1 eps (y3 - z) / d_eps^3 dy3 dA
               = (G/eps) sum_y r(y_h) [ (A + eps^2 z^2)^(-1/2)
                                        - (A + eps^2 (1-z)^2)^(-1/2) ] dA,

    A = |y_h - x_h|^2.  The kernel is bounded, with a peak of width ~eps at
    the probe column; cells near the column are subdivided so the horizontal
    quadrature resolves the peak even when eps is below the cell size.
    """
    x0, y0, z = probe
    b = 1.0 - z
    X, Y = grid2.mesh()
    dx = X - x0
    dy = Y - y0
    A = dx**2 + dy**2

    def ker(a):
        return (1.0 / np.sqrt(a + (eps * z) ** 2)
                - 1.0 / np.sqrt(a + (eps * b) ** 2)) / eps

    h = max(grid2.hx, grid2.hy)
    rho_ref = max(6.0 * eps, 3.0 * h)
    near = A < rho_ref**2
    total = float(np.sum(r2d[~near] * ker(A[~near]))) * grid2.cell_area
    m = int(np.clip(np.ceil(8.0 * h / eps), 1, 160))
    sx = ((np.arange(m) + 0.5) / m - 0.5) * grid2.hx
    sy = ((np.arange(m) + 0.5) / m - 0.5) * grid2.hy
    SX, SY = np.meshgrid(sx, sy, indexing="ij")
    dxn = dx[near][:, None] + SX.ravel()[None, :]
    dyn = dy[near][:, None] + SY.ravel()[None, :]
    sub = np.mean(ker(dxn**2 + dyn**2), axis=1)
    total += float(np.sum(r2d[near] * sub)) * grid2.cell_area
    return G * total


def _e1_at_probe(r2d, grid2: Grid2D, eps: float, nz: int, probe, G: float):
    """E1 at (probe_h, probe_z) for an x3-independent density (unit vertical extent)."""
    X, Y = grid2.mesh()
    zs = (np.arange(nz) + 0.5) / nz
    dx = X.ravel()[:, None] - probe[0]
    dy = Y.ravel()[:, None] - probe[1]
    dz = zs[None, :] - probe[2]
    d2 = dx**2 + dy**2 + eps**2 * dz**2
    near = d2 < 1e-30
    d2 = np.where(near, 1.0, d2)
    inv = d2 ** (-1.5)
    inv[near] = 0.0
    w = r2d.ravel()[:, None] * grid2.cell_area / nz
    ex = np.sum(w * inv * dx)
    ey = np.sum(w * inv * dy)
    ez = eps * np.sum(w * inv * dz)
    return G * np.array([ex, ey, ez])


def limit_errors(eps_list, grid2: Grid2D, r2d=None, g: ExternalDensity | None = None,
                 probes=None, nz: int = 32, G: float = 1.0):
    """Kernel-limit discrepancies per eps.

    Columns: (G4) distance between the eps-regularized horizontal self field
    and the v.p. 2D gradient; (G1) distance between the eps-dependent external
    field and its eps -> 0 limit; (G3) deviation of the vertical self-field
    component J(eps) from its thin-layer asymptote.  For a probe at height
    x3 = z inside the layer, J(eps) tends to the nonzero constant

        L = 2 pi G r(x_h) (1 - 2 z)

    (the mass in the probe's own column pulls toward the layer mid-plane),
    approached at first order in eps.  The column reports
    |J(eps) - L - eps C| with the slope C measured once at a refined
    reference eps (eps_list[-1] / 8), so it vanishes at second order.
    Requires a strictly decreasing eps_list.
    """
    eps_list = list(eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    if probes is None:
        probes = [(0.31 * grid2.lx, 0.47 * grid2.ly, 0.8)]
    vp = vp_gradient_2d(r2d, grid2, G) if r2d is not None else None
    xs, ys = grid2.centers()

    slopes = {}
    if r2d is not None:
        eps_ref = eps_list[-1] / 8.0
        for k, probe in enumerate(probes):
            ix = int(np.argmin(np.abs(xs - probe[0])))
            iy = int(np.argmin(np.abs(ys - probe[1])))
            corner = (xs[ix] + grid2.hx / 2.0, ys[iy] + grid2.hy / 2.0, probe[2])
            L = 2.0 * np.pi * G * _bilinear_at(r2d, grid2, corner[0], corner[1]) \
                * (1.0 - 2.0 * corner[2])
            J_ref = _vertical_kernel_integral(r2d, grid2, eps_ref, corner, G)
            slopes[k] = (corner, L, (J_ref - L) / eps_ref)

    rows = []
    for eps in eps_list:
        g3 = g4 = g1 = 0.0
        for k, probe in enumerate(probes):
            if r2d is not None:
                # G4 is evaluated at a cell center so that the v.p. reference
                # and the regularized sum exclude the same singular column.
                ix = int(np.argmin(np.abs(xs - probe[0])))
                iy = int(np.argmin(np.abs(ys - probe[1])))
                center = (xs[ix], ys[iy], probe[2])
                e1 = _e1_at_probe(r2d, grid2, eps, nz, center, G)
                g4 = max(g4, float(np.hypot(e1[0] - vp[0, ix, iy], e1[1] - vp[1, ix, iy])))
                # G3 is evaluated at a cell corner, away from source points.
                corner, L, C = slopes[k]
                J = _vertical_kernel_integral(r2d, grid2, eps, corner, G)
                g3 = max(g3, abs(J - L - eps * C))
            if g is not None:
                g1 = max(g1, _external_discrepancy(g, eps, probe, G))
        rows.append((eps, g1, g3, g4))
    return rows


def _external_discrepancy(g: ExternalDensity, eps: float, probe, G: float):
    gx, gy, gz, gv = g.points()
    w = gv * g.dv
    dx = gx - probe[0]
    dy = gy - probe[1]
    for_z3 = eps * probe[2]
    dz_eps = gz - for_z3
    dz_lim = gz
    inv_eps = (dx**2 + dy**2 + dz_eps**2) ** (-1.5)
    inv_lim = (dx**2 + dy**2 + dz_lim**2) ** (-1.5)
    vec = np.array(
        [
            np.sum(w * (inv_eps - inv_lim) * dx),
            np.sum(w * (inv_eps - inv_lim) * dy),
            np.sum(w * (inv_eps * dz_eps - inv_lim * dz_lim)),
        ]
    )
    return float(G * np.linalg.norm(vec))


# ---------------------------------------------------------------------------
# Centrifugal force
# ---------------------------------------------------------------------------

def centrifugal_force_2d(chi: float, grid: Grid2D, ghosts: int = 0):
    """grad |chi e3 x x|^2 = 2 chi^2 (x1, x2)."""
    X, Y = grid.mesh(ghosts)
    return 2.0 * chi**2 * np.stack([X, Y])


def centrifugal_force_3d(chi: float, grid: Grid3D, ghosts: int = 0):
    X, Y, Z = grid.mesh(ghosts)
    return 2.0 * chi**2 * np.stack([X, Y, np.zeros_like(Z)])
