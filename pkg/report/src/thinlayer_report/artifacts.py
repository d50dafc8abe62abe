"""Study-directory readers for the documented output formats."""

from __future__ import annotations

import glob
import json
import os
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = ["StudyArtifacts", "read_snapshot", "read_csv"]


def read_csv(path: str) -> dict[str, np.ndarray]:
    """Read a harness CSV (header line + numeric rows) into named columns."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        rows = [line.strip().split(",") for line in f if line.strip()]
    if any(len(r) != len(header) for r in rows):
        raise ValueError(f"{path}: row width does not match header")
    data = np.array([[float(v) for v in r] for r in rows]) if rows else \
        np.empty((0, len(header)))
    return {name: data[:, j] for j, name in enumerate(header)}


def read_snapshot(path: str):
    """Read a snapshot: JSON header line, then named float64 blocks.

    Returns (meta, {name: array}).  Raises ValueError with a descriptive
    message on a malformed header or truncated payload.
    """
    with open(path, "rb") as f:
        line = f.readline()
        try:
            meta = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}: malformed snapshot header: {exc}") from exc
        if not isinstance(meta, dict) or "fields" not in meta:
            raise ValueError(f"{path}: snapshot header lacks a 'fields' list")
        arrays = {}
        for entry in meta["fields"]:
            try:
                name, shape = entry["name"], tuple(int(s) for s in entry["shape"])
            except (TypeError, KeyError) as exc:
                raise ValueError(f"{path}: malformed field entry {entry!r}") from exc
            count = int(np.prod(shape)) if shape else 1
            buf = f.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError(f"{path}: truncated payload for field {name!r}")
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(shape)
    return meta, arrays


@dataclass
class StudyArtifacts:
    """Paths and parsed tables of one study directory.

    Missing pieces are recorded as notices, not errors, so a partial study
    still renders whatever is present.
    """

    root: str
    convergence: dict = field(default_factory=dict)
    ref2d: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)  # eps label -> columns
    snapshots: list = field(default_factory=list)
    study_meta: dict = field(default_factory=dict)
    notices: list = field(default_factory=list)

    @classmethod
    def load(cls, root: str) -> "StudyArtifacts":
        if not os.path.isdir(root):
            raise ValueError(f"not a study directory: {root}")
        art = cls(root=root)
        conv = os.path.join(root, "convergence.csv")
        if os.path.exists(conv):
            art.convergence = read_csv(conv)
            if "eps" not in art.convergence or "sup_I" not in art.convergence:
                raise ValueError(f"{conv}: missing eps/sup_I columns")
        else:
            art.notices.append("convergence.csv not found")
        ref = os.path.join(root, "ref2d.csv")
        if os.path.exists(ref):
            art.ref2d = read_csv(ref)
        else:
            art.notices.append("ref2d.csv not found")
        for path in sorted(glob.glob(os.path.join(root, "diag_eps*.csv"))):
            label = re.fullmatch(r"diag_eps(.*)\.csv", os.path.basename(path)).group(1)
            art.diagnostics[label] = read_csv(path)
        if not art.diagnostics:
            art.notices.append("no diagnostic CSVs found")
        art.snapshots = sorted(glob.glob(os.path.join(root, "*.snap")))
        if not art.snapshots:
            art.notices.append("no snapshots found")
        meta_path = os.path.join(root, "study.json")
        if os.path.exists(meta_path):
            with open(meta_path, "r", encoding="utf-8") as f:
                art.study_meta = json.load(f)
        if art.convergence:
            expected = art.study_meta.get("eps", {})
            have = {round(float(v), 12) for v in art.convergence["eps"]}
            for e in expected:
                if round(float(e), 12) not in have:
                    art.notices.append(f"eps={e} missing from convergence.csv")
        return art
