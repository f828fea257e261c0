"""Principal component analysis with variance-retention component selection.

fit/transform are separated so cross-validation can fit on the training fold
only. For wide data (n < d, the usual case with 4096-wide activation
vectors) the eigenproblem is solved on the n x n Gram matrix instead of the
d x d covariance.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .dataset import fmt_float
from .errors import (
    DegenerateData,
    DimMismatch,
    FormatError,
    InvalidRetention,
    NonFinite,
    ZeroVariance,
)

# Eigenvalues below RANK_EPS * largest are treated as zero and never selected.
RANK_EPS = 1e-12


@dataclass(frozen=True)
class PcaModel:
    """Fitted projection: mean vector plus orthonormal axes.

    components has shape (input_dim, output_dim) with columns in descending
    eigenvalue order; eigenvalues holds the matching m values.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    retention: float

    def __post_init__(self):
        for field in ("mean", "components", "eigenvalues"):
            arr = np.ascontiguousarray(getattr(self, field), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)

    @property
    def input_dim(self) -> int:
        return self.components.shape[0]

    @property
    def output_dim(self) -> int:
        return self.components.shape[1]


def component_count(eigenvalues: np.ndarray, retention: float) -> int:
    """Smallest m whose leading eigenvalue mass reaches ``retention``.

    Expects non-negative eigenvalues in descending order.
    """
    if not 0.0 < retention <= 1.0:
        raise InvalidRetention(f"retention must be in (0, 1], got {retention}")
    lam = np.asarray(eigenvalues, dtype=np.float64)
    total = float(lam.sum())
    if total <= 0.0:
        raise ZeroVariance("eigenvalues sum to zero")
    frac = np.cumsum(lam) / total
    m = int(np.searchsorted(frac, retention, side="left")) + 1
    # Cumulative rounding can leave frac[-1] a hair under 1.0.
    return min(m, lam.size)


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry positive (ties: lowest index)."""
    idx = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[idx, np.arange(components.shape[1])])
    signs[signs == 0] = 1.0
    return components * signs


def fit(X: np.ndarray, retention: float) -> PcaModel:
    """Fit PCA on the rows of X, keeping components per ``component_count``.

    Eigenpairs are those of the sample covariance (divisor n - 1) of the
    mean-centered data; at most min(n - 1, d) components are considered.
    Sign convention and a fixed eigensolver make repeated fits on the same
    matrix identical.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("X must be a 2-D matrix with at least 2 rows")
    if not np.isfinite(X).all():
        raise NonFinite("X contains NaN/Inf")
    if not 0.0 < retention <= 1.0:
        raise InvalidRetention(f"retention must be in (0, 1], got {retention}")
    n, d = X.shape
    mean = X.mean(axis=0)
    Xc = X - mean

    if n <= d:
        # Gram/snapshot route: eigenvectors of (Xc Xc^T)/(n-1) lift to
        # covariance eigenvectors via Xc^T v / sqrt((n-1) lambda).
        gram = (Xc @ Xc.T) / (n - 1)
        eigvals, eigvecs = np.linalg.eigh(gram)
        order = np.argsort(eigvals, kind="stable")[::-1]
        eigvals = eigvals[order]
        eigvecs = eigvecs[:, order]
        lam_max = max(float(eigvals[0]), 0.0)
        if lam_max <= 0.0:
            raise DegenerateData("all rows identical: zero total variance")
        keep = eigvals > RANK_EPS * lam_max
        eigvals = eigvals[keep]
        snapshots = eigvecs[:, keep]
        axes = (Xc.T @ snapshots) / np.sqrt((n - 1) * eigvals)
    else:
        cov = (Xc.T @ Xc) / (n - 1)
        eigvals, axes = np.linalg.eigh(cov)
        order = np.argsort(eigvals, kind="stable")[::-1]
        eigvals = eigvals[order]
        axes = axes[:, order]
        lam_max = max(float(eigvals[0]), 0.0)
        if lam_max <= 0.0:
            raise DegenerateData("all rows identical: zero total variance")
        keep = eigvals > RANK_EPS * lam_max
        eigvals = eigvals[keep]
        axes = axes[:, keep]

    limit = min(n - 1, d)
    eigvals = np.maximum(eigvals[:limit], 0.0)
    axes = axes[:, :limit]
    m = component_count(eigvals, retention)
    return PcaModel(
        mean=mean,
        components=_fix_signs(axes[:, :m]),
        eigenvalues=eigvals[:m],
        retention=float(retention),
    )


def transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Project rows of X onto the model axes: (X - mean) @ components."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise DimMismatch(
            f"expected {model.input_dim} columns, got {X.shape[1] if X.ndim == 2 else X.shape}"
        )
    return (X - model.mean) @ model.components


def inverse_transform(model: PcaModel, Z: np.ndarray) -> np.ndarray:
    """Back-project reduced rows into the input space."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != model.output_dim:
        raise DimMismatch(f"expected {model.output_dim} columns")
    return Z @ model.components.T + model.mean


def save_model(model: PcaModel, path: str) -> None:
    """Dump the model in VPF-CSV layout plus a sidecar listing.

    Rows are named ``mean`` and ``pc{i}`` with layer tag ``pca``; the
    ``<path>.meta.txt`` sidecar records retention, component count, and the
    eigenvalues one per line at full precision. The dump is a model
    artifact, not a loadable feature dataset.
    """
    d = model.input_dim
    lines = ["name,layer," + ",".join(f"f{i}" for i in range(d))]
    lines.append("mean,pca," + ",".join(map(fmt_float, model.mean)))
    for i in range(model.output_dim):
        lines.append(f"pc{i},pca," + ",".join(map(fmt_float, model.components[:, i])))
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)

    side = [f"retention={fmt_float(model.retention)}", f"components={model.output_dim}"]
    side += [fmt_float(v) for v in model.eigenvalues]
    tmp = f"{path}.meta.txt.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(side) + "\n")
    os.replace(tmp, f"{path}.meta.txt")


def load_model(path: str) -> PcaModel:
    """Read back a model written by save_model (bit-exact)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    if len(lines) < 3:
        raise FormatError(f"{path}: model dump needs a header, a mean row, and at least one axis")
    rows = [ln.split(",") for ln in lines[1:]]
    if rows[0][0] != "mean":
        raise FormatError(f"{path}: first data row must be the mean vector")
    mean = np.array(rows[0][2:], dtype=np.float64)
    comps = np.array([r[2:] for r in rows[1:]], dtype=np.float64).T
    with open(f"{path}.meta.txt", "r", encoding="utf-8") as fh:
        side = [ln for ln in fh.read().split("\n") if ln]
    retention = float(side[0].split("=", 1)[1])
    eigvals = np.array(side[2:], dtype=np.float64)
    return PcaModel(mean=mean, components=comps, eigenvalues=eigvals, retention=retention)
