"""Synthetic asymmetric state pairs for remainder-term quadrature checks.

Every term of the analytic fields is individually even (cos) or odd (sin)
about each wall, matching the ghost closure parity, so the discrete gradients
inside the remainder evaluation converge at second order.  The fields carry
mixed horizontal frequencies so that no remainder integral vanishes by
symmetry.
"""

import numpy as np

from thinlayer import solver2d, solver3d
from thinlayer.fields import Grid2D, Grid3D, interior
from thinlayer.gravity import GravityConfig
from thinlayer.solver2d import SolverConfig2D


def synthetic_pair(grid3: Grid3D, chi: float = 0.5):
    """Planar/3D state pair plus analytic E, gphi and planar time derivatives."""
    grid2 = grid3.horizontal
    pi = np.pi

    def f2(fn):
        x, y = grid2.mesh(ghosts=2)
        return fn(x, y)

    def f3(fn):
        x, y, z = grid3.mesh(ghosts=2)
        return fn(x, y, z)

    s2 = solver2d.State2D.uniform(grid2)
    s2.r[...] = f2(lambda x, y: 1.0 + 0.2 * np.cos(pi * x) * np.cos(2 * pi * y)
                   + 0.1 * np.cos(2 * pi * x) * np.cos(pi * y))
    s2.Theta[...] = f2(lambda x, y: 1.0 + 0.15 * np.cos(2 * pi * x) * np.cos(pi * y)
                       - 0.05 * np.cos(pi * x) * np.cos(pi * y))
    s2.V[0][...] = f2(lambda x, y: 0.3 * np.sin(pi * x) * np.sin(2 * pi * y)
                      + 0.15 * np.sin(2 * pi * x) * np.sin(pi * y))
    s2.V[1][...] = f2(lambda x, y: -0.2 * np.sin(2 * pi * x) * np.sin(pi * y)
                      + 0.1 * np.sin(pi * x) * np.sin(pi * y))

    s3 = solver3d.State3D.uniform(grid3)
    s3.rho[...] = f3(lambda x, y, z: (1.0 + 0.2 * np.cos(pi * x) * np.cos(2 * pi * y)
                                      + 0.1 * np.cos(2 * pi * x) * np.cos(pi * y))
                     * (1.0 + 0.1 * np.cos(pi * z) * np.cos(pi * x) * np.cos(pi * y)))
    s3.theta[...] = f3(lambda x, y, z: (1.0 + 0.15 * np.cos(2 * pi * x) * np.cos(pi * y)
                                        - 0.05 * np.cos(pi * x) * np.cos(pi * y))
                       * (1.0 + 0.08 * np.cos(pi * z) * np.cos(2 * pi * x) * np.cos(pi * y)))
    s3.u[0][...] = f3(lambda x, y, z: 0.36 * np.sin(pi * x) * np.sin(2 * pi * y)
                      + 0.12 * np.sin(2 * pi * x) * np.sin(pi * y)
                      + 0.1 * np.sin(pi * x) * np.sin(pi * y) * np.cos(pi * z)
                      + 0.04 * np.sin(2 * pi * x) * np.sin(2 * pi * y) * np.cos(pi * z))
    s3.u[1][...] = f3(lambda x, y, z: -0.16 * np.sin(2 * pi * x) * np.sin(pi * y)
                      + 0.12 * np.sin(pi * x) * np.sin(pi * y)
                      + 0.07 * np.sin(2 * pi * x) * np.sin(2 * pi * y) * np.cos(pi * z)
                      + 0.03 * np.sin(pi * x) * np.sin(2 * pi * y) * np.cos(pi * z))
    s3.u[2][...] = f3(lambda x, y, z: 0.12 * np.sin(pi * x) * np.sin(pi * y) * np.sin(pi * z))

    xi, yi, zi = grid3.mesh()
    E = np.stack([
        0.2 * np.sin(pi * xi) * np.cos(pi * yi) * np.cos(pi * zi),
        -0.15 * np.cos(pi * xi) * np.sin(pi * yi),
        0.1 * np.sin(pi * xi) * np.sin(pi * yi) * np.sin(pi * zi),
    ])

    x2, y2 = grid2.mesh()
    gphi = np.stack([
        0.25 * np.sin(pi * x2) * np.cos(pi * y2),
        -0.3 * np.cos(pi * x2) * np.sin(pi * y2),
    ])

    dt_r = 0.1 * np.cos(pi * x2) * np.cos(pi * y2)
    dt_V = np.stack([
        0.2 * np.sin(pi * x2) * np.sin(pi * y2),
        -0.1 * np.sin(2 * pi * x2) * np.sin(pi * y2),
    ])
    dt_Th = 0.15 * np.cos(2 * pi * x2) * np.cos(pi * y2)

    cfg2 = SolverConfig2D(gravity=GravityConfig(alpha=1, beta=0.5, chi=chi))
    return s3, s2, cfg2, E, gphi, (dt_r, dt_V, dt_Th)
