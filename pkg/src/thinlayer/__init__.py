"""Thin-layer dimension-reduction laboratory for a rotating, gravitating,
heat-conducting compressible fluid: 3D and 2D finite-volume solvers plus the
relative-entropy diagnostics connecting them."""

__version__ = "0.1.0"
