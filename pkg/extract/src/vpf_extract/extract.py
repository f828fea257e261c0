"""Batch extraction: image folder -> one VPF-CSV file per requested layer."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UndecodableImage
from .network import fc_activations, load_network
from .preprocess import preprocess
from .vpfcsv import is_valid_sample_name, write_features

LAYERS = ("fc6", "fc7")
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp"}


@dataclass
class ExtractionJob:
    images_dir: str
    layers: tuple[str, ...] = LAYERS
    out_prefix: str = "features"
    weights_path: str | None = None
    batch_size: int = 4
    skipped: list[str] = field(default_factory=list)

    def __post_init__(self):
        for layer in self.layers:
            if layer not in LAYERS:
                raise ValueError(f"unknown layer {layer!r}; expected subset of {LAYERS}")
        if not self.layers:
            raise ValueError("at least one layer required")


def _collect_images(job: ExtractionJob) -> list[Path]:
    root = Path(job.images_dir)
    if not root.is_dir():
        raise NotADirectoryError(f"{job.images_dir} is not a directory")
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    kept = []
    for path in files:
        if not is_valid_sample_name(path.stem):
            job.skipped.append(str(path))
            print(f"skipping {path.name}: not a valid sample name", file=sys.stderr)
            continue
        kept.append(path)
    return kept


def extract_features(job: ExtractionJob) -> dict[str, str]:
    """Run the job; returns {layer: written path}.

    Rows are ordered by sorted filename, one per decodable, well-named
    image. Misnamed or undecodable files are reported on stderr, recorded
    in job.skipped, and the rest proceed.
    """
    paths = _collect_images(job)
    model = load_network(job.weights_path)

    names: list[str] = []
    fc6_rows: list[np.ndarray] = []
    fc7_rows: list[np.ndarray] = []
    batch: list[np.ndarray] = []
    batch_names: list[str] = []

    def flush():
        if not batch:
            return
        stacked = np.stack(batch)
        fc6, fc7 = fc_activations(model, stacked)
        fc6_rows.extend(fc6)
        fc7_rows.extend(fc7)
        names.extend(batch_names)
        batch.clear()
        batch_names.clear()

    for path in paths:
        try:
            tensor = preprocess(str(path))
        except UndecodableImage as exc:
            job.skipped.append(str(path))
            print(f"skipping {path.name}: {exc}", file=sys.stderr)
            continue
        batch.append(tensor)
        batch_names.append(path.stem)
        if len(batch) >= job.batch_size:
            flush()
    flush()

    if not names:
        raise UndecodableImage(f"no usable images in {job.images_dir}")

    written = {}
    for layer in job.layers:
        rows = np.stack(fc6_rows if layer == "fc6" else fc7_rows)
        out_path = f"{job.out_prefix}.{layer}.csv"
        write_features(out_path, names, layer, rows)
        written[layer] = out_path
    return written
