"""Snapshot and CSV persistence.

Snapshot format: one JSON text line (UTF-8, newline-terminated) describing
grid sizes, time, eps and the field layout, followed by the fields as flat
little-endian float64 arrays concatenated in the order listed in the header.
"""

from __future__ import annotations

import json
import os

import numpy as np

__all__ = ["write_snapshot", "read_snapshot", "output_dir", "write_csv"]


def output_dir(configured: str) -> str:
    """Resolve the output directory; THINLAYER_OUT overrides the config."""
    out = os.environ.get("THINLAYER_OUT", configured)
    os.makedirs(out, exist_ok=True)
    return out


def write_snapshot(path: str, meta: dict, arrays: dict):
    """Write named float64 arrays after a JSON header line."""
    header = dict(meta)
    header["fields"] = [
        {"name": name, "shape": list(np.asarray(a).shape)} for name, a in arrays.items()
    ]
    with open(path, "wb") as f:
        f.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        for a in arrays.values():
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_snapshot(path: str):
    """Inverse of write_snapshot: returns (meta, {name: array})."""
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        arrays = {}
        for spec in header["fields"]:
            n = int(np.prod(spec["shape"]))
            buf = f.read(8 * n)
            if len(buf) != 8 * n:
                raise ValueError(f"truncated snapshot: field {spec['name']}")
            arrays[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(spec["shape"]).copy()
    meta = {k: v for k, v in header.items() if k != "fields"}
    return meta, arrays


def write_csv(path: str, header: str, rows):
    """Write a CSV with a fixed header line and preformatted rows."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(row + "\n")
