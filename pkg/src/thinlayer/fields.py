"""Structured grids, ghost-cell boundary closure and the anisotropic
differential operators on the rescaled layer.

Layout: cell-centered collocated fields stored as numpy arrays with NG ghost
rings per face.  Derivative operators are centered second-order stencils and
shrink the array by one ring per derivative, so a field with NG=2 ghosts
supports one derivative on the interior plus one ring (enough to compose a
divergence of a gradient/stress).

The vertical coordinate always spans (0, 1); the layer thickness eps enters
only through the 1/eps (and 1/eps**2) factors of the scaled operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NG = 2  # ghost rings

__all__ = [
    "NG",
    "Grid2D",
    "Grid3D",
    "interior",
    "new_field",
    "grad_h",
    "div_h",
    "grad_eps",
    "div_eps",
    "laplace_eps",
    "laplace_h",
    "stress_3d",
    "stress_2d",
    "heat_flux_3d",
    "heat_flux_2d",
    "stress_contraction_3d",
    "stress_contraction_2d",
    "apply_scalar_bc_2d",
    "apply_scalar_bc_3d",
    "apply_velocity_bc_2d",
    "apply_velocity_bc_3d",
    "check_finite",
]


@dataclass(frozen=True)
class Grid2D:
    """Uniform rectangular grid on omega (default the unit square)."""

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError("2D grids need at least 8 cells per direction")
        if self.lx <= 0.0 or self.ly <= 0.0:
            raise ValueError("extents must be positive")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def centers(self, ghosts: int = 0):
        """Cell-center coordinate arrays (1D each), optionally with ghosts."""
        ix = np.arange(-ghosts, self.nx + ghosts)
        iy = np.arange(-ghosts, self.ny + ghosts)
        return (ix + 0.5) * self.hx, (iy + 0.5) * self.hy

    def mesh(self, ghosts: int = 0):
        x, y = self.centers(ghosts)
        return np.meshgrid(x, y, indexing="ij")


@dataclass(frozen=True)
class Grid3D:
    """Grid2D extended by nz cells over (0, 1), with operator thickness eps."""

    nx: int
    ny: int
    nz: int
    eps: float
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError("horizontal resolution needs at least 8 cells")
        if self.nz < 4:
            raise ValueError("vertical resolution needs at least 4 cells")
        if not 0.0 < self.eps <= 1.0:
            raise ValueError("eps must lie in (0, 1]")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def hz(self) -> float:
        return 1.0 / self.nz

    @property
    def cell_vol(self) -> float:
        return self.hx * self.hy * self.hz

    @property
    def horizontal(self) -> Grid2D:
        return Grid2D(self.nx, self.ny, self.lx, self.ly)

    def centers(self, ghosts: int = 0):
        ix = np.arange(-ghosts, self.nx + ghosts)
        iy = np.arange(-ghosts, self.ny + ghosts)
        iz = np.arange(-ghosts, self.nz + ghosts)
        return (ix + 0.5) * self.hx, (iy + 0.5) * self.hy, (iz + 0.5) * self.hz

    def mesh(self, ghosts: int = 0):
        x, y, z = self.centers(ghosts)
        return np.meshgrid(x, y, z, indexing="ij")


def interior(f, ng: int = NG):
    """View of the interior cells of a ghosted array."""
    sl = (slice(ng, -ng),) * f.ndim
    return f[sl]


def new_field(grid, ncomp: int = 0):
    """Allocate a ghosted field; ncomp > 0 stacks components on axis 0."""
    if isinstance(grid, Grid3D):
        shape = (grid.nx + 2 * NG, grid.ny + 2 * NG, grid.nz + 2 * NG)
    else:
        shape = (grid.nx + 2 * NG, grid.ny + 2 * NG)
    if ncomp:
        shape = (ncomp,) + shape
    return np.zeros(shape)


# ---------------------------------------------------------------------------
# Centered differences (each call shrinks the array by one ring)
# ---------------------------------------------------------------------------

def _dx(f, h):
    return (f[2:, 1:-1] - f[:-2, 1:-1]) / (2.0 * h) if f.ndim == 2 else (
        f[2:, 1:-1, 1:-1] - f[:-2, 1:-1, 1:-1]
    ) / (2.0 * h)


def _dy(f, h):
    return (f[1:-1, 2:] - f[1:-1, :-2]) / (2.0 * h) if f.ndim == 2 else (
        f[1:-1, 2:, 1:-1] - f[1:-1, :-2, 1:-1]
    ) / (2.0 * h)


def _dz(f, h):
    return (f[1:-1, 1:-1, 2:] - f[1:-1, 1:-1, :-2]) / (2.0 * h)


def grad_h(f, grid):
    """Horizontal gradient (works for 2D and 3D ghosted fields)."""
    return np.stack([_dx(f, grid.hx), _dy(f, grid.hy)])


def div_h(v, grid):
    return _dx(v[0], grid.hx) + _dy(v[1], grid.hy)


def grad_eps(f, grid: Grid3D):
    """Scaled gradient (d_x, d_y, (1/eps) d_z) of a ghosted 3D field."""
    return np.stack([_dx(f, grid.hx), _dy(f, grid.hy), _dz(f, grid.hz) / grid.eps])


def div_eps(v, grid: Grid3D):
    """Scaled divergence of a ghosted 3D vector field."""
    return _dx(v[0], grid.hx) + _dy(v[1], grid.hy) + _dz(v[2], grid.hz) / grid.eps


def laplace_eps(f, grid: Grid3D):
    """Scaled Laplacian as the exact composition div_eps(grad_eps(f)).

    The vertical second difference carries 1/eps**2; the composed (wide)
    stencil consumes two ghost rings.
    """
    return div_eps(grad_eps(f, grid), grid)


def laplace_h(f, grid: Grid2D):
    """Horizontal Laplacian as the exact composition div_h(grad_h(f))."""
    return div_h(grad_h(f, grid), grid)


# ---------------------------------------------------------------------------
# Stress tensors and heat fluxes
# ---------------------------------------------------------------------------

def _velocity_gradient_3d(u, grid: Grid3D):
    """G[i, j] = scaled d_j u_i, shrunk by one ring."""
    return np.stack([grad_eps(u[i], grid) for i in range(3)])


def stress_3d(mu, u, grid: Grid3D):
    """S = mu (grad_eps u + grad_eps u^T - (2/3) div_eps u I); bulk viscosity 0.

    ``mu`` must be shrunk to the same ring as the gradients (one derivative).
    Returns an array of shape (3, 3, ...).
    """
    G = _velocity_gradient_3d(u, grid)
    div = G[0, 0] + G[1, 1] + G[2, 2]
    S = np.empty_like(G)
    for i in range(3):
        for j in range(3):
            S[i, j] = mu * (G[i, j] + G[j, i])
        S[i, i] -= mu * (2.0 / 3.0) * div
    return S


def _velocity_gradient_2d(V, grid: Grid2D):
    return np.stack([grad_h(V[i], grid) for i in range(2)])


def stress_2d(mu, V, grid: Grid2D):
    """S_h = mu (grad V + grad V^T - div V I) + (mu/3) div V I (eta = 0)."""
    G = _velocity_gradient_2d(V, grid)
    div = G[0, 0] + G[1, 1]
    S = np.empty_like(G)
    for i in range(2):
        for j in range(2):
            S[i, j] = mu * (G[i, j] + G[j, i])
        S[i, i] -= mu * (2.0 / 3.0) * div
    return S


def heat_flux_3d(kappa, theta, grid: Grid3D):
    """q = -kappa grad_eps theta (kappa shrunk by one ring)."""
    return -kappa * grad_eps(theta, grid)


def heat_flux_2d(kappa, Theta, grid: Grid2D):
    return -kappa * grad_h(Theta, grid)


def stress_contraction_3d(mu, u, grid: Grid3D):
    """S : grad_eps u, pointwise nonnegative for eta = 0."""
    G = _velocity_gradient_3d(u, grid)
    S = stress_3d(mu, u, grid)
    return np.einsum("ij...,ij...->...", S, G)


def stress_contraction_2d(mu, V, grid: Grid2D):
    G = _velocity_gradient_2d(V, grid)
    S = stress_2d(mu, V, grid)
    return np.einsum("ij...,ij...->...", S, G)


# ---------------------------------------------------------------------------
# Boundary closure (mirror ghosts; sign +1 even, -1 odd)
# ---------------------------------------------------------------------------

def _mirror_axis(f, axis: int, sign: float):
    n = f.shape[axis]
    idx = [slice(None)] * f.ndim

    def at(i):
        j = list(idx)
        j[axis] = i
        return tuple(j)

    for k in range(NG):
        f[at(NG - 1 - k)] = sign * f[at(NG + k)]
        f[at(n - NG + k)] = sign * f[at(n - NG - 1 - k)]


def apply_scalar_bc_2d(f, even: bool = True):
    s = 1.0 if even else -1.0
    _mirror_axis(f, 0, s)
    _mirror_axis(f, 1, s)


def apply_scalar_bc_3d(f, even_lateral: bool = True, even_vertical: bool = True):
    _mirror_axis(f, 0, 1.0 if even_lateral else -1.0)
    _mirror_axis(f, 1, 1.0 if even_lateral else -1.0)
    _mirror_axis(f, 2, 1.0 if even_vertical else -1.0)


def apply_velocity_bc_2d(V):
    """No-slip on all of d(omega): reflect-negate both components."""
    for c in range(2):
        _mirror_axis(V[c], 0, -1.0)
        _mirror_axis(V[c], 1, -1.0)


def apply_velocity_bc_3d(u):
    """No-slip laterally; slip on top/bottom (u3 odd, u_h even)."""
    for c in range(3):
        _mirror_axis(u[c], 0, -1.0)
        _mirror_axis(u[c], 1, -1.0)
    _mirror_axis(u[0], 2, 1.0)
    _mirror_axis(u[1], 2, 1.0)
    _mirror_axis(u[2], 2, -1.0)


def check_finite(*arrays, where: str = "field"):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))
            raise FloatingPointError(f"non-finite values in {where} at {bad[:5].tolist()}")
