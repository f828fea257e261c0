"""Element-wise merging of two row-aligned feature datasets."""

from __future__ import annotations

import numpy as np

from .dataset import FUSED_TAGS, FeatureDataset
from .errors import DimMismatch, RowOrderMismatch

MERGE_METHODS = FUSED_TAGS  # "min", "max", "mean"


def merge(a: FeatureDataset, b: FeatureDataset, method: str) -> FeatureDataset:
    """Merge two datasets element-wise with min, max, or arithmetic mean.

    Rows must describe the same images: alignment is checked by sample name,
    not assumed from position, because the two files are produced
    independently. Mean is computed as (a + b) / 2 in 64-bit arithmetic.
    """
    if method not in MERGE_METHODS:
        raise ValueError(f"unknown merge method {method!r}; expected one of {MERGE_METHODS}")
    if a.features.shape != b.features.shape:
        raise DimMismatch(
            f"cannot merge {a.features.shape[0]}x{a.features.shape[1]} "
            f"with {b.features.shape[0]}x{b.features.shape[1]}"
        )
    if a.meta != b.meta:
        for i, (ma, mb) in enumerate(zip(a.meta, b.meta)):
            if ma != mb:
                raise RowOrderMismatch(i, ma.name, mb.name)
    if method == "min":
        out = np.minimum(a.features, b.features)
    elif method == "max":
        out = np.maximum(a.features, b.features)
    else:
        out = (a.features + b.features) / 2.0
    return FeatureDataset(features=out, meta=a.meta, layer_tag=method)
