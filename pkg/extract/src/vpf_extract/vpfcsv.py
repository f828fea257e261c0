"""Writer side of the VPF-CSV interface shared with the pipeline package.

Kept deliberately dependency-free: the format (not an import) is the
contract between the two packages.
"""

from __future__ import annotations

import os
import re

import numpy as np

# S{1|2}-P{id}-{M|F}-{age}-{1..7}-{N|S}; ages 8..78
_NAME_RE = re.compile(r"S[12]-P[1-9]\d*-[MF]-([1-9]\d*)-[1-7]-[NS]\Z")


def is_valid_sample_name(name: str) -> bool:
    m = _NAME_RE.match(name)
    return bool(m) and 8 <= int(m.group(1)) <= 78


def write_features(path: str, names: list[str], layer: str, rows: np.ndarray) -> None:
    """Write one VPF-CSV file atomically; floats in shortest round-trip form."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] != len(names):
        raise ValueError("rows must be (len(names), d)")
    lines = ["name,layer," + ",".join(f"f{i}" for i in range(rows.shape[1]))]
    for name, row in zip(names, rows):
        lines.append(name + "," + layer + "," + ",".join(repr(float(v)) for v in row))
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)
