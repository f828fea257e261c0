"""Sample naming, task labels, and the VPF-CSV feature file format.

Sample names follow the ``S{1|2}-P{id}-{M|F}-{age}-{1..7}-{N|S}`` scheme,
e.g. ``S1-P2-M-14-1-N``. Feature files are plain UTF-8 CSV with a
``name,layer,f0,...,f{d-1}`` header; floats are written in shortest
round-trip form so that save -> load is bit exact.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from .errors import (
    DimMismatch,
    FormatError,
    MalformedName,
    NonFiniteValueError,
)

RAW_DIM = 4096

# Layer tags as they appear in the file format.
LAYER_TAGS = ("fc6", "fc7", "min", "max", "mean", "pca")
FUSED_TAGS = ("min", "max", "mean")

TASKS = ("identity", "gender", "age", "smile")

AGE_MIN, AGE_MAX = 8, 78


class Gender(Enum):
    MALE = "M"
    FEMALE = "F"


class Expression(Enum):
    NORMAL = "N"
    SMILE = "S"


class AgeGroup(IntEnum):
    """Age brackets; the integer values give the total ordering."""

    CHILDREN = 0
    YOUTH = 1
    ADULTS = 2
    ELDERLY = 3


AGE_GROUP_NAMES = ("Children", "Youth", "Adults", "Elderly")
GENDER_NAMES = ("Female", "Male")
EXPRESSION_NAMES = ("Normal", "Smile")


@dataclass(frozen=True, slots=True)
class SampleMeta:
    """Identity/gender/age/expression metadata parsed from one sample name."""

    session: int
    subject: int
    gender: Gender
    age_years: int
    image_index: int
    expression: Expression

    def __post_init__(self):
        if self.session not in (1, 2):
            raise ValueError(f"session must be 1 or 2, got {self.session}")
        if self.subject < 1:
            raise ValueError(f"subject must be positive, got {self.subject}")
        if not AGE_MIN <= self.age_years <= AGE_MAX:
            raise ValueError(f"age must be in {AGE_MIN}..{AGE_MAX}, got {self.age_years}")
        if not 1 <= self.image_index <= 7:
            raise ValueError(f"image index must be in 1..7, got {self.image_index}")

    @property
    def name(self) -> str:
        return format_sample_name(self)


def format_sample_name(meta: SampleMeta) -> str:
    """Render metadata back into the canonical file-name string."""
    return (
        f"S{meta.session}-P{meta.subject}-{meta.gender.value}"
        f"-{meta.age_years}-{meta.image_index}-{meta.expression.value}"
    )


_SESSION_RE = re.compile(r"S[12]\Z")
_SUBJECT_RE = re.compile(r"P[1-9]\d*\Z")
_NUMBER_RE = re.compile(r"[1-9]\d*\Z")


def parse_sample_name(name: str) -> SampleMeta:
    """Parse a sample name into its six metadata fields.

    Raises MalformedName identifying the offending field on wrong field
    count, a bad token, or an out-of-range value.
    """
    parts = name.split("-")
    if len(parts) != 6:
        raise MalformedName(name, "field count", f"expected 6 hyphen-separated fields, got {len(parts)}")
    s_tok, p_tok, g_tok, a_tok, i_tok, e_tok = parts
    if not _SESSION_RE.match(s_tok):
        raise MalformedName(name, "session", "expected S1 or S2")
    if not _SUBJECT_RE.match(p_tok):
        raise MalformedName(name, "subject", "expected P followed by a positive integer")
    if g_tok not in ("M", "F"):
        raise MalformedName(name, "gender", "expected M or F")
    if not _NUMBER_RE.match(a_tok) or not AGE_MIN <= int(a_tok) <= AGE_MAX:
        raise MalformedName(name, "age", f"expected integer in {AGE_MIN}..{AGE_MAX}")
    if i_tok not in ("1", "2", "3", "4", "5", "6", "7"):
        raise MalformedName(name, "image", "expected digit in 1..7")
    if e_tok not in ("N", "S"):
        raise MalformedName(name, "expression", "expected N or S")
    return SampleMeta(
        session=int(s_tok[1:]),
        subject=int(p_tok[1:]),
        gender=Gender(g_tok),
        age_years=int(a_tok),
        image_index=int(i_tok),
        expression=Expression(e_tok),
    )


def derive_age_group(age_years: int) -> AgeGroup:
    """Map an age in years to its bracket.

    Brackets partition the positive integers: <=18 Children, 19-30 Youth,
    31-50 Adults, >=51 Elderly. Age 18 goes to Children so that no integer
    falls between brackets.
    """
    if age_years < 1:
        raise ValueError(f"age must be positive, got {age_years}")
    if age_years <= 18:
        return AgeGroup.CHILDREN
    if age_years <= 30:
        return AgeGroup.YOUTH
    if age_years <= 50:
        return AgeGroup.ADULTS
    return AgeGroup.ELDERLY


@dataclass(frozen=True)
class FeatureDataset:
    """An n x d float64 feature matrix plus per-row sample metadata.

    The feature array is made read-only at construction; instances are safe
    to share across worker threads.
    """

    features: np.ndarray
    meta: tuple[SampleMeta, ...]
    layer_tag: str

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise ValueError(f"features must be a 2-D matrix, got ndim={feats.ndim}")
        if feats.shape[0] == 0:
            raise ValueError("dataset must contain at least one sample")
        if feats.shape[0] != len(self.meta):
            raise ValueError(f"{feats.shape[0]} feature rows but {len(self.meta)} metadata entries")
        if self.layer_tag not in LAYER_TAGS:
            raise ValueError(f"unknown layer tag {self.layer_tag!r}")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "meta", tuple(self.meta))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.meta)


@dataclass(frozen=True)
class TaskLabelView:
    """Per-sample class indices for one recognition task."""

    task: str
    labels: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be a 1-D vector")
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            raise ValueError("label index outside class_names")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def class_count(self) -> int:
        return len(self.class_names)

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)


def label_view(ds: FeatureDataset, task: str) -> TaskLabelView:
    """Derive class labels for one task from the dataset metadata.

    Class-name order is fixed so confusion matrices are reproducible:
    identity ascends by subject number; gender is Female, Male; age follows
    the bracket order; expression is Normal, Smile. Gender/age/expression
    views always carry the full class list even when a class is empty.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    if task == "identity":
        subjects = sorted({m.subject for m in ds.meta})
        index = {s: i for i, s in enumerate(subjects)}
        labels = np.fromiter((index[m.subject] for m in ds.meta), dtype=np.int64, count=ds.n)
        names = tuple(f"P{s}" for s in subjects)
    elif task == "gender":
        labels = np.fromiter(
            (0 if m.gender is Gender.FEMALE else 1 for m in ds.meta), dtype=np.int64, count=ds.n
        )
        names = GENDER_NAMES
    elif task == "age":
        labels = np.fromiter(
            (int(derive_age_group(m.age_years)) for m in ds.meta), dtype=np.int64, count=ds.n
        )
        names = AGE_GROUP_NAMES
    else:  # smile
        labels = np.fromiter(
            (0 if m.expression is Expression.NORMAL else 1 for m in ds.meta),
            dtype=np.int64,
            count=ds.n,
        )
        names = EXPRESSION_NAMES
    return TaskLabelView(task=task, labels=labels, class_names=names)


def fmt_float(x: float) -> str:
    """Shortest decimal string that round-trips the 64-bit value."""
    return repr(float(x))


def _atomic_write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def save_features(ds: FeatureDataset, path: str) -> None:
    """Write a dataset in VPF-CSV form (bit-exact round trip with load)."""
    lines = ["name,layer," + ",".join(f"f{i}" for i in range(ds.dim))]
    for meta, row in zip(ds.meta, ds.features):
        lines.append(meta.name + "," + ds.layer_tag + "," + ",".join(map(fmt_float, row)))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def load_features(path: str, expected_dim: int | None = None) -> FeatureDataset:
    """Load and validate a VPF-CSV feature file.

    Args:
        path: file to read.
        expected_dim: when given, reject files whose width differs.

    Raises:
        FormatError: bad header, inconsistent row length, bad sample name,
            unknown or mixed layer tags, unparseable value, or no data rows.
        NonFiniteValueError: NaN/Inf entry (reports data row/feature column).
        DimMismatch: expected_dim given and violated.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(f"{path}: empty file")
    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "name" or header[1] != "layer":
        raise FormatError(f"{path}: line 1: header must be name,layer,f0,...")
    dim = len(header) - 2
    for j, tok in enumerate(header[2:]):
        if tok != f"f{j}":
            raise FormatError(f"{path}: line 1: expected column f{j}, got {tok!r}")
    if len(lines) == 1:
        raise FormatError(f"{path}: empty data section")

    metas: list[SampleMeta] = []
    rows = np.empty((len(lines) - 1, dim), dtype=np.float64)
    tag: str | None = None
    for r, line in enumerate(lines[1:]):
        lineno = r + 2
        fields = line.split(",")
        if len(fields) != dim + 2:
            raise FormatError(f"{path}: line {lineno}: expected {dim + 2} fields, got {len(fields)}")
        try:
            metas.append(parse_sample_name(fields[0]))
        except MalformedName as exc:
            raise FormatError(f"{path}: line {lineno}: {exc}") from exc
        row_tag = fields[1]
        if row_tag not in LAYER_TAGS:
            raise FormatError(f"{path}: line {lineno}: unknown layer tag {row_tag!r}")
        if tag is None:
            tag = row_tag
        elif row_tag != tag:
            raise FormatError(f"{path}: line {lineno}: mixed layer tags ({tag!r} vs {row_tag!r})")
        try:
            rows[r] = np.array(fields[2:], dtype=np.float64)
        except ValueError:
            bad = next((i for i, tok in enumerate(fields[2:]) if not _is_float(tok)), 0)
            raise FormatError(f"{path}: line {lineno}: bad float {fields[2 + bad]!r} in column f{bad}") from None

    finite = np.isfinite(rows)
    if not finite.all():
        r, c = np.argwhere(~finite)[0]
        raise NonFiniteValueError(int(r), int(c))
    if expected_dim is not None and dim != expected_dim:
        raise DimMismatch(f"{path}: expected {expected_dim} features, file has {dim}")
    return FeatureDataset(features=rows, meta=tuple(metas), layer_tag=tag)


def _is_float(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


# Ages used by the synthetic generator, one per bracket.
_SYNTH_AGES = (12, 25, 40, 60)


def _synth_meta(classes: int, per_class: int) -> tuple[SampleMeta, ...]:
    # Deterministic and seed-independent so that two generator calls with
    # different seeds stay row-aligned for merging.
    metas = []
    for c in range(classes):
        subject = c + 1
        gender = Gender.MALE if subject % 2 == 1 else Gender.FEMALE
        age = _SYNTH_AGES[c % 4]
        for t in range(per_class):
            image = 1 + t % 7
            metas.append(
                SampleMeta(
                    session=1 + (t // 7) % 2,
                    subject=subject,
                    gender=gender,
                    age_years=age,
                    image_index=image,
                    expression=Expression.NORMAL if image <= 5 else Expression.SMILE,
                )
            )
    return tuple(metas)


def synth_dataset(
    classes: int,
    per_class: int,
    dim: int,
    separation: float,
    seed: int,
    layer_tag: str = "fc6",
) -> tuple[FeatureDataset, TaskLabelView]:
    """Generate Gaussian class blobs with unit noise.

    Class centroids sit at radius ``separation`` in random directions, so
    expected inter-centroid distance grows linearly with ``separation``
    (roughly sqrt(2) * separation) and separation 0 collapses every class
    onto one centroid. Metadata is derived from the class/sample index only,
    so two calls with different seeds produce row-aligned datasets. Output
    is bit-identical for a fixed argument tuple.
    """
    if classes < 2:
        raise ValueError("classes must be >= 2")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if separation < 0:
        raise ValueError("separation must be >= 0")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((classes, dim))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    centroids = separation * dirs / norms
    labels = np.repeat(np.arange(classes, dtype=np.int64), per_class)
    feats = centroids[labels] + rng.standard_normal((classes * per_class, dim))
    ds = FeatureDataset(features=feats, meta=_synth_meta(classes, per_class), layer_tag=layer_tag)
    view = TaskLabelView(
        task="identity", labels=labels, class_names=tuple(f"P{c + 1}" for c in range(classes))
    )
    return ds, view
