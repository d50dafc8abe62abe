"""Post-processing for thinlayer study directories.

Reads only the documented study outputs (convergence/diagnostic CSVs and the
snapshot format: one JSON header line followed by named little-endian float64
blocks) and renders a single self-contained HTML report with embedded PNGs.
"""

from .artifacts import StudyArtifacts, read_snapshot, read_csv
from .render import (
    render_convergence,
    render_fields,
    render_remainders,
    build_report,
)

__version__ = "0.1.0"

__all__ = [
    "StudyArtifacts",
    "read_snapshot",
    "read_csv",
    "render_convergence",
    "render_fields",
    "render_remainders",
    "build_report",
]
