"""Stratified k-fold cross-validation and the metric set it reports.

Fold metrics are pooled, not averaged: the aggregate confusion matrix is
the element-wise sum of the fold matrices, and ROC/PRC areas are computed
from the pooled per-sample scores. On imbalanced data this differs from
averaging per-fold metrics, so the choice is fixed here.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import pca as pca_mod
from .classify import (
    ClassifierSpec,
    GaussianNBSpec,
    KnnSpec,
    MlpSpec,
    RandomForestSpec,
    train,
    with_seed,
)
from .dataset import FeatureDataset, TaskLabelView, fmt_float
from .errors import (
    DegenerateLabels,
    EmptyClass,
    EmptyMatrix,
    TooFewSamples,
)

THREADS_ENV = "VEILKIT_THREADS"


def worker_count(n_items: int) -> int:
    """Worker threads to use: min(items, CPUs), capped by VEILKIT_THREADS."""
    cap = os.environ.get(THREADS_ENV)
    limit = os.cpu_count() or 1
    if cap is not None:
        try:
            limit = min(limit, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, min(n_items, limit))


@dataclass(frozen=True)
class ConfusionMatrix:
    """Integer counts; rows are true classes, columns predicted."""

    counts: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if counts.shape[0] != len(self.class_names):
            raise ValueError("class_names length must match matrix size")
        if (counts < 0).any():
            raise ValueError("confusion matrix entries must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.class_names != other.class_names:
            raise ValueError("cannot add matrices over different class sets")
        return ConfusionMatrix(self.counts + other.counts, self.class_names)


def confusion_matrix(y_true, y_pred, class_names) -> ConfusionMatrix:
    c = len(class_names)
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    counts = np.bincount(y_true * c + y_pred, minlength=c * c).reshape(c, c)
    return ConfusionMatrix(counts, class_names)


def accuracy(cm: ConfusionMatrix) -> float:
    """Trace over total."""
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix is empty")
    return float(np.trace(cm.counts)) / cm.total


def weighted_f_measure(cm: ConfusionMatrix) -> float:
    """Support-weighted mean of per-class F1.

    A class whose precision or recall has a zero denominator contributes
    F1 = 0 at its support weight.
    """
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix is empty")
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    out = 0.0
    for c in range(counts.shape[0]):
        p = tp[c] / predicted[c] if predicted[c] > 0 else 0.0
        r = tp[c] / support[c] if support[c] > 0 else 0.0
        f1 = 2.0 * p * r / (p + r) if (p + r) > 0 else 0.0
        out += (support[c] / cm.total) * f1
    return out


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties replaced by the mean rank of their group."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def binary_roc_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """AUC by the rank statistic with midrank tie handling."""
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("need at least one positive and one negative")
    ranks = _midranks(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def binary_prc_area(scores: np.ndarray, positive: np.ndarray) -> float:
    """Area under precision-recall by descending-score sweep.

    Tied scores are grouped into one step; summation is step-wise with no
    interpolation, so all-identical scores give exactly the positive rate.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    if n_pos == 0 or n_pos == positive.size:
        raise DegenerateLabels("need at least one positive and one negative")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = positive[order]
    area = 0.0
    tp = fp = 0
    prev_recall = 0.0
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and s[j + 1] == s[i]:
            j += 1
        tp += int(p[i : j + 1].sum())
        fp += (j - i + 1) - int(p[i : j + 1].sum())
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return float(area)


def _one_vs_rest(metric, scores: np.ndarray, labels: np.ndarray) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.ndim != 2 or scores.shape[0] != labels.shape[0]:
        raise ValueError("scores must be (n, classes) aligned with labels")
    if np.unique(labels).size < 2:
        raise DegenerateLabels("labels contain a single class")
    total_weight = 0.0
    acc = 0.0
    for c in range(scores.shape[1]):
        positive = labels == c
        n_pos = int(positive.sum())
        if n_pos == 0 or n_pos == labels.size:
            continue  # class not evaluable; weights renormalize over the rest
        acc += n_pos * metric(scores[:, c], positive)
        total_weight += n_pos
    if total_weight == 0:
        raise DegenerateLabels("no class had both positives and negatives")
    return acc / total_weight


def roc_area(scores: np.ndarray, labels: np.ndarray) -> float:
    """Support-weighted one-vs-rest ROC area."""
    return _one_vs_rest(binary_roc_auc, scores, labels)


def prc_area(scores: np.ndarray, labels: np.ndarray) -> float:
    """Support-weighted one-vs-rest precision-recall area."""
    return _one_vs_rest(binary_prc_area, scores, labels)


@dataclass(frozen=True)
class FoldPlan:
    """Disjoint test-index lists covering 0..n-1."""

    folds: tuple[np.ndarray, ...]
    seed: int

    def train_indices(self, i: int) -> np.ndarray:
        n = sum(f.size for f in self.folds)
        mask = np.ones(n, dtype=bool)
        mask[self.folds[i]] = False
        return np.flatnonzero(mask)


def stratified_folds(labels, k: int, seed: int, class_count: int | None = None) -> FoldPlan:
    """Assign samples to k folds, keeping per-class counts within 1.

    Each class is shuffled with the seeded generator and dealt to
    consecutive folds round-robin; a global cursor keeps overall fold sizes
    balanced too.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise TooFewSamples(f"{n} samples cannot fill {k} folds")
    c = class_count if class_count is not None else int(labels.max()) + 1
    counts = np.bincount(labels, minlength=c)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise EmptyClass(f"class {int(empty[0])} has no samples")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    cursor = 0
    for cls in range(c):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        fold_of[idx] = (cursor + np.arange(idx.size)) % k
        cursor += idx.size
    return FoldPlan(tuple(np.flatnonzero(fold_of == f) for f in range(k)), seed)


def plain_folds(n: int, k: int, seed: int) -> FoldPlan:
    """Unstratified folds: one global shuffle dealt round-robin."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise TooFewSamples(f"{n} samples cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % k
    return FoldPlan(tuple(np.flatnonzero(fold_of == f) for f in range(k)), seed)


@dataclass(frozen=True)
class PipelineConfig:
    """What happens between the feature matrix and the fold metrics.

    ``merge`` is recorded for the report only; merging is row-wise and
    leakage-free, so it runs before cross-validation.
    """

    spec: ClassifierSpec
    pca: float | None = None
    pca_scope: str = "fold"
    merge: str | None = None

    def __post_init__(self):
        if self.pca_scope not in ("fold", "global"):
            raise ValueError("pca_scope must be 'fold' or 'global'")
        if self.pca is not None and not 0.0 < self.pca <= 1.0:
            raise ValueError("pca retention must be in (0, 1]")


def describe_spec(spec: ClassifierSpec) -> str:
    if isinstance(spec, KnnSpec):
        return f"{spec.k}nn"
    if isinstance(spec, GaussianNBSpec):
        return "nb"
    if isinstance(spec, RandomForestSpec):
        return "rf"
    if isinstance(spec, MlpSpec):
        return "mlp"
    return type(spec).__name__


@dataclass(frozen=True)
class EvalReport:
    """Cross-validation outcome: per-fold and pooled counts plus metrics.

    ``wall_time_s`` is informational and deliberately excluded from the
    serialized form so identical runs produce identical bytes.
    """

    fold_matrices: tuple[ConfusionMatrix, ...]
    aggregate: ConfusionMatrix
    accuracy: float
    weighted_f: float
    roc: float
    prc: float
    config: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def to_text(self) -> str:
        lines = [f"{key}={value}" for key, value in self.config.items()]
        lines.append(f"samples={self.aggregate.total}")
        lines.append(f"classes={len(self.aggregate.class_names)}")
        lines.append(f"accuracy={fmt_float(self.accuracy)}")
        lines.append(f"weighted_f_measure={fmt_float(self.weighted_f)}")
        lines.append(f"roc_area={fmt_float(self.roc)}")
        lines.append(f"prc_area={fmt_float(self.prc)}")
        lines.append("confusion_matrix=")
        lines.append("," + ",".join(self.aggregate.class_names))
        for name, row in zip(self.aggregate.class_names, self.aggregate.counts):
            lines.append(name + "," + ",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"


def _derived_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def cross_validate(
    ds: FeatureDataset,
    view: TaskLabelView,
    pipeline: PipelineConfig,
    k: int = 10,
    seed: int = 42,
    stratified: bool = True,
    workers: int | None = None,
) -> EvalReport:
    """Evaluate one pipeline under k-fold cross-validation.

    With pca_scope='fold' the projection is fitted on each training fold
    only (leakage-free, the default); 'global' fits once on the full matrix
    first. Fold results are deterministic for a fixed seed and independent
    of the worker count.
    """
    if view.labels.shape[0] != ds.n:
        raise ValueError("label view does not match dataset length")
    start = time.perf_counter()
    X = ds.features
    y = view.labels
    class_count = view.class_count
    plan = (
        stratified_folds(y, k, seed, class_count)
        if stratified
        else plain_folds(ds.n, k, seed)
    )

    global_model = None
    if pipeline.pca is not None and pipeline.pca_scope == "global":
        global_model = pca_mod.fit(X, pipeline.pca)
        X_global = pca_mod.transform(global_model, X)

    def run_fold(i: int):
        try:
            test_idx = plan.folds[i]
            train_idx = plan.train_indices(i)
            if global_model is not None:
                Xtr, Xte = X_global[train_idx], X_global[test_idx]
                m = global_model.output_dim
            elif pipeline.pca is not None:
                fold_model = pca_mod.fit(X[train_idx], pipeline.pca)
                Xtr = pca_mod.transform(fold_model, X[train_idx])
                Xte = pca_mod.transform(fold_model, X[test_idx])
                m = fold_model.output_dim
            else:
                Xtr, Xte = X[train_idx], X[test_idx]
                m = X.shape[1]
            spec = with_seed(pipeline.spec, _derived_seed(seed, i))
            model = train(spec, Xtr, y[train_idx], class_count=class_count)
            pred, scores = model.predict(Xte)
            cm = confusion_matrix(y[test_idx], pred, view.class_names)
            return cm, test_idx, scores, m
        except Exception as exc:
            exc.args = (f"[fold {i}] {exc}",)
            raise

    n_workers = workers if workers is not None else worker_count(k)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run_fold, range(k)))
    else:
        results = [run_fold(i) for i in range(k)]

    pooled_scores = np.empty((ds.n, class_count), dtype=np.float64)
    fold_ms = []
    matrices = []
    for cm, test_idx, scores, m in results:
        matrices.append(cm)
        pooled_scores[test_idx] = scores
        fold_ms.append(m)
    aggregate = matrices[0]
    for cm in matrices[1:]:
        aggregate = aggregate + cm

    config = dict(pipeline_config_echo(pipeline, view, ds, k, seed, stratified, fold_ms))
    return EvalReport(
        fold_matrices=tuple(matrices),
        aggregate=aggregate,
        accuracy=accuracy(aggregate),
        weighted_f=weighted_f_measure(aggregate),
        roc=roc_area(pooled_scores, y),
        prc=prc_area(pooled_scores, y),
        config=config,
        wall_time_s=time.perf_counter() - start,
    )


def pipeline_config_echo(pipeline, view, ds, k, seed, stratified, fold_ms):
    """Key/value pairs echoed into every report."""
    dims = sorted(set(fold_ms))
    yield "task", view.task
    yield "layer", ds.layer_tag
    yield "merge", pipeline.merge if pipeline.merge else "none"
    yield "pca", fmt_float(pipeline.pca) if pipeline.pca is not None else "none"
    yield "pca_scope", pipeline.pca_scope
    yield "classifier", describe_spec(pipeline.spec)
    yield "classifier_spec", repr(pipeline.spec)
    yield "folds", str(k)
    yield "seed", str(seed)
    yield "stratified", "true" if stratified else "false"
    yield "features_in", str(ds.dim)
    yield "features_used", ",".join(str(m) for m in dims) if len(dims) > 1 else str(dims[0])
