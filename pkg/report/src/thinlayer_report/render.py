"""Renderers: convergence plot, remainder time series, field images, and the
combined self-contained HTML report."""

from __future__ import annotations

import base64
import html
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .artifacts import StudyArtifacts, read_snapshot

__all__ = [
    "render_convergence",
    "render_fields",
    "render_remainders",
    "build_report",
]

_CONVERGENCE_COLUMNS = ("sup_I", "int_u_W12", "int_theta_L2")


def _save(fig, path):
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def render_convergence(artifacts: StudyArtifacts, outpath: str):
    """Log-log plot of the convergence columns vs eps with fitted slopes.

    Returns (path, slope_of_sup_I); with fewer than two eps rows no plot is
    produced and (None, None) is returned after recording a notice.
    """
    table = artifacts.convergence
    if not table or len(table.get("eps", ())) < 2:
        artifacts.notices.append(
            "convergence plot skipped: need at least two eps rows"
        )
        return None, None
    eps = np.asarray(table["eps"], dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    slope_main = None
    for col in _CONVERGENCE_COLUMNS:
        if col not in table:
            continue
        vals = np.asarray(table[col], dtype=float)
        keep = vals > 0.0
        if np.count_nonzero(keep) < 2:
            artifacts.notices.append(f"column {col}: not enough positive values to fit")
            continue
        slope = float(np.polyfit(np.log(eps[keep]), np.log(vals[keep]), 1)[0])
        if col == "sup_I":
            slope_main = slope
        ax.loglog(eps[keep], vals[keep], "o-", label=f"{col} (slope {slope:.2f})")
    ax.set_xlabel("eps")
    ax.set_ylabel("value")
    ax.set_title("Convergence with layer thickness")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, outpath), slope_main


def render_remainders(csv_columns: dict, outpath: str):
    """Time series of the remainder terms plus the exact cancellation sums.

    ``csv_columns`` is a parsed diagnostic CSV (from ``read_csv``).  Returns
    (path, max |R7+K1|, max |R8+K2|).
    """
    t = np.asarray(csv_columns["t"], dtype=float)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
    names = [f"R{j}" for j in range(1, 12)] + ["K1", "K2", "K3"]
    for name in names:
        if name in csv_columns:
            ax1.plot(t, csv_columns[name], label=name, lw=1.0)
    ax1.set_ylabel("remainder terms")
    ax1.legend(fontsize=6, ncol=5)
    ax1.grid(alpha=0.3)
    c1 = np.asarray(csv_columns["R7"]) + np.asarray(csv_columns["K1"])
    c2 = np.asarray(csv_columns["R8"]) + np.asarray(csv_columns["K2"])
    ax2.plot(t, c1, label="R7 + K1")
    ax2.plot(t, c2, label="R8 + K2")
    ax2.set_xlabel("t")
    ax2.set_ylabel("cancellation sums")
    ax2.legend(fontsize=8)
    ax2.grid(alpha=0.3)
    path = _save(fig, outpath)
    return path, float(np.max(np.abs(c1))), float(np.max(np.abs(c2)))


def _plane(arr: np.ndarray) -> np.ndarray:
    """2D plane to display: 3D fields are sliced at the middle level."""
    if arr.ndim == 3:
        return arr[:, :, arr.shape[2] // 2]
    if arr.ndim == 2:
        return arr
    raise ValueError(f"cannot render a field of shape {arr.shape}")


def render_fields(snapshot_path: str, outdir: str, prefix: str | None = None):
    """Render every field of a snapshot to a PNG.

    Signed fields get a symmetric diverging color scale; nonnegative fields a
    sequential one.  Returns {field name: (path, displayed 2D array)}.
    """
    meta, arrays = read_snapshot(snapshot_path)
    if prefix is None:
        prefix = os.path.splitext(os.path.basename(snapshot_path))[0]
    os.makedirs(outdir, exist_ok=True)
    out = {}
    for name, arr in arrays.items():
        plane = _plane(np.asarray(arr))
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        if np.min(plane) < 0.0:
            m = float(np.max(np.abs(plane))) or 1.0
            im = ax.imshow(plane.T, origin="lower", cmap="RdBu_r", vmin=-m, vmax=m)
        else:
            im = ax.imshow(plane.T, origin="lower", cmap="viridis")
        ax.set_title(f"{name}  (t = {meta.get('time', '?')})", fontsize=9)
        fig.colorbar(im, ax=ax, shrink=0.85)
        path = _save(fig, os.path.join(outdir, f"{prefix}_{name}.png"))
        out[name] = (path, plane)
    return out


def _embed(path: str) -> str:
    with open(path, "rb") as f:
        data = base64.b64encode(f.read()).decode("ascii")
    return f'<img src="data:image/png;base64,{data}"/>'


def build_report(study_dir: str, out_html: str) -> str:
    """Render a study directory into one self-contained HTML file.

    PNGs are written next to the HTML (in ``<stem>_assets/``) and embedded
    into the page, so the HTML alone is portable.  The study directory itself
    is never written to.
    """
    art = StudyArtifacts.load(study_dir)
    assets = os.path.splitext(out_html)[0] + "_assets"
    os.makedirs(assets, exist_ok=True)
    sections = []

    conv_path, slope = render_convergence(art, os.path.join(assets, "convergence.png"))
    if conv_path:
        sections.append(
            "<h2>Convergence</h2>"
            + _embed(conv_path)
            + f"<p>Fitted empirical order of sup<sub>t</sub> I: {slope:.3f}</p>"
        )

    for label, cols in art.diagnostics.items():
        path, m1, m2 = render_remainders(
            cols, os.path.join(assets, f"remainders_eps{label}.png")
        )
        sections.append(
            f"<h2>Remainder terms, eps = {html.escape(label)}</h2>"
            + _embed(path)
            + f"<p>max |R7+K1| = {m1:.2e}, max |R8+K2| = {m2:.2e}</p>"
        )

    shown = [p for p in art.snapshots if "_000" not in p][-2:] or art.snapshots[-2:]
    for snap in shown:
        imgs = render_fields(snap, assets)
        body = "".join(_embed(p) for p, _ in imgs.values())
        sections.append(f"<h2>Fields: {html.escape(os.path.basename(snap))}</h2>{body}")

    notices = "".join(f"<li>{html.escape(n)}</li>" for n in art.notices)
    if notices:
        sections.append(f"<h2>Notices</h2><ul>{notices}</ul>")

    page = (
        "<!DOCTYPE html><html><head><meta charset='utf-8'>"
        f"<title>Study report: {html.escape(os.path.basename(os.path.abspath(study_dir)))}</title>"
        "<style>body{font-family:sans-serif;max-width:60em;margin:auto}"
        "img{max-width:100%;margin:4px}</style></head><body>"
        f"<h1>Study report: {html.escape(os.path.basename(os.path.abspath(study_dir)))}</h1>"
        + "".join(sections)
        + "</body></html>"
    )
    with open(out_html, "w", encoding="utf-8") as f:
        f.write(page)
    return out_html
