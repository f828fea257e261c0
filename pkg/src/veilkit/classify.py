"""The classifier families compared by the pipeline.

Five variants behind one train/predict surface: k-nearest neighbors
(k in {1,3,5}), Gaussian naive Bayes, random forest, and a single-hidden-
layer feed-forward network. Every variant returns a hard label plus
per-class scores that sum to 1; ties always resolve to the lowest class
index, and a fixed seed reproduces predictions bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimError, EmptyClass, KTooLarge, NonFinite

__all__ = [
    "KnnSpec",
    "GaussianNBSpec",
    "RandomForestSpec",
    "MlpSpec",
    "TrainedClassifier",
    "train",
    "knn_search",
    "DecisionTree",
]


@dataclass(frozen=True)
class KnnSpec:
    k: int = 1

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError(f"k must be odd and positive, got {self.k}")


@dataclass(frozen=True)
class GaussianNBSpec:
    # Per-class variances are floored at var_floor_scale * mean feature
    # variance so constant features cannot blow up the log-likelihood.
    var_floor_scale: float = 1e-9


@dataclass(frozen=True)
class RandomForestSpec:
    trees: int = 100
    max_features: int | None = None  # None -> ceil(log2 d) + 1
    bootstrap: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.trees < 1:
            raise ValueError("trees must be >= 1")


@dataclass(frozen=True)
class MlpSpec:
    hidden_units: int | None = None  # None -> ceil((d + classes) / 2)
    learning_rate: float = 0.3
    momentum: float = 0.2
    epochs: int = 500
    standardize: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


ClassifierSpec = KnnSpec | GaussianNBSpec | RandomForestSpec | MlpSpec


def with_seed(spec: ClassifierSpec, seed: int) -> ClassifierSpec:
    """Fill in the RNG seed on specs that own one and have none set."""
    if isinstance(spec, (RandomForestSpec, MlpSpec)) and spec.seed is None:
        return replace(spec, seed=seed)
    return spec


class TrainedClassifier:
    """Fitted model; immutable and safe to share across threads."""

    class_count: int
    input_dim: int

    def predict(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (labels, scores); label = argmax of scores, lowest index wins ties."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DimError(f"expected {self.input_dim} feature columns")
        scores = self._scores(X)
        return np.argmax(scores, axis=1), scores

    def _scores(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _check_training_input(X, y, class_count):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DimError("X must be (n, d) and y (n,)")
    if not np.isfinite(X).all():
        raise NonFinite("training matrix contains NaN/Inf")
    if class_count is None:
        class_count = int(y.max()) + 1
    counts = np.bincount(y, minlength=class_count)
    if X.shape[0] < class_count:
        raise EmptyClass(f"{X.shape[0]} samples cannot cover {class_count} classes")
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise EmptyClass(f"class {int(empty[0])} has no training samples")
    return X, y, class_count


def train(spec: ClassifierSpec, X, y, class_count: int | None = None) -> TrainedClassifier:
    """Fit one classifier variant. Deterministic for fixed spec, seed, data."""
    X, y, class_count = _check_training_input(X, y, class_count)
    if isinstance(spec, KnnSpec):
        return KnnModel(spec, X, y, class_count)
    if isinstance(spec, GaussianNBSpec):
        return GaussianNBModel(spec, X, y, class_count)
    if isinstance(spec, RandomForestSpec):
        return RandomForestModel(spec, X, y, class_count)
    if isinstance(spec, MlpSpec):
        return MlpModel(spec, X, y, class_count)
    raise TypeError(f"unknown classifier spec {type(spec).__name__}")


# k-nearest neighbors


def knn_search(train_X: np.ndarray, query: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Exact k smallest Euclidean distances, ascending.

    Equal distances are broken by the lower training index.
    """
    train_X = np.asarray(train_X, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    if k > train_X.shape[0]:
        raise KTooLarge(f"k={k} but only {train_X.shape[0]} training rows")
    dist = np.sqrt(((train_X - query) ** 2).sum(axis=1))
    order = np.argsort(dist, kind="stable")[:k]
    return [(int(i), float(dist[i])) for i in order]


class KnnModel(TrainedClassifier):
    """Stores the training set; scores are unweighted neighbor-vote fractions."""

    def __init__(self, spec, X, y, class_count):
        self.spec = spec
        self.X = X
        self.y = y
        self.class_count = class_count
        self.input_dim = X.shape[1]
        if spec.k > X.shape[0]:
            raise KTooLarge(f"k={spec.k} but only {X.shape[0]} training rows")

    def _scores(self, Q: np.ndarray) -> np.ndarray:
        k = self.spec.k
        n = self.X.shape[0]
        scores = np.empty((Q.shape[0], self.class_count), dtype=np.float64)
        # Chunked so raw 4096-wide queries stay within memory.
        chunk = max(1, int(4e7) // max(1, n * self.X.shape[1]))
        for start in range(0, Q.shape[0], chunk):
            block = Q[start : start + chunk]
            d2 = ((block[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
            order = np.argsort(d2, axis=1, kind="stable")[:, :k]
            votes = self.y[order]
            for i in range(block.shape[0]):
                scores[start + i] = np.bincount(votes[i], minlength=self.class_count)
        return scores / k


# Gaussian naive Bayes


class GaussianNBModel(TrainedClassifier):
    """Per-class Gaussians with shared variance floor; log-domain posteriors."""

    def __init__(self, spec, X, y, class_count):
        self.class_count = class_count
        self.input_dim = X.shape[1]
        overall_var = X.var(axis=0, ddof=0)
        floor = max(spec.var_floor_scale * float(overall_var.mean()), 1e-300)
        self.means = np.empty((class_count, X.shape[1]))
        self.variances = np.empty((class_count, X.shape[1]))
        priors = np.empty(class_count)
        for c in range(class_count):
            rows = X[y == c]
            self.means[c] = rows.mean(axis=0)
            self.variances[c] = np.maximum(rows.var(axis=0, ddof=0), floor)
            priors[c] = rows.shape[0] / X.shape[0]
        self.log_priors = np.log(priors)

    def _scores(self, Q: np.ndarray) -> np.ndarray:
        # log p(c|x) up to a constant, evaluated per class
        loglik = np.empty((Q.shape[0], self.class_count))
        for c in range(self.class_count):
            var = self.variances[c]
            dev = Q - self.means[c]
            loglik[:, c] = self.log_priors[c] - 0.5 * (
                np.log(2.0 * np.pi * var).sum() + (dev * dev / var).sum(axis=1)
            )
        top = loglik.max(axis=1, keepdims=True)
        post = np.exp(loglik - top)
        return post / post.sum(axis=1, keepdims=True)


# Random forest


class DecisionTree:
    """CART-style tree: Gini impurity, midpoint thresholds, unlimited depth.

    At each node a random subset of ``max_features`` candidate columns is
    drawn (without replacement) from the tree's own RNG; scanning candidates
    in sorted order keeps equal-impurity ties deterministic.
    """

    def __init__(self, max_features: int, rng: np.random.Generator):
        self.max_features = max_features
        self.rng = rng
        self.nodes: list[tuple] = []  # leaf: ("leaf", label); split: ("split", f, thr, left, right)

    def fit(self, X: np.ndarray, y: np.ndarray, class_count: int) -> "DecisionTree":
        self.class_count = class_count
        stack = [(np.arange(X.shape[0]), self._new_node())]
        while stack:
            idx, node_id = stack.pop()
            counts = np.bincount(y[idx], minlength=class_count)
            if np.count_nonzero(counts) <= 1:
                self.nodes[node_id] = ("leaf", int(np.argmax(counts)))
                continue
            split = self._best_split(X, y, idx)
            if split is None:
                self.nodes[node_id] = ("leaf", int(np.argmax(counts)))
                continue
            feature, threshold = split
            mask = X[idx, feature] <= threshold
            left, right = self._new_node(), self._new_node()
            self.nodes[node_id] = ("split", feature, threshold, left, right)
            stack.append((idx[mask], left))
            stack.append((idx[~mask], right))
        return self

    def _new_node(self) -> int:
        self.nodes.append(("leaf", 0))
        return len(self.nodes) - 1

    def _best_split(self, X, y, idx):
        n = idx.size
        n_feat = X.shape[1]
        k = min(self.max_features, n_feat)
        candidates = np.sort(self.rng.choice(n_feat, size=k, replace=False))
        best = None
        best_score = np.inf
        onehot = np.zeros((n, self.class_count))
        onehot[np.arange(n), y[idx]] = 1.0
        for f in candidates:
            vals = X[idx, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            boundaries = np.flatnonzero(sv[:-1] < sv[1:])
            if boundaries.size == 0:
                continue
            prefix = np.cumsum(onehot[order], axis=0)
            nl = boundaries + 1.0
            nr = n - nl
            left_counts = prefix[boundaries]
            right_counts = prefix[-1] - left_counts
            gini_l = 1.0 - ((left_counts / nl[:, None]) ** 2).sum(axis=1)
            gini_r = 1.0 - ((right_counts / nr[:, None]) ** 2).sum(axis=1)
            weighted = (nl * gini_l + nr * gini_r) / n
            j = int(np.argmin(weighted))
            if weighted[j] < best_score:
                best_score = weighted[j]
                b = boundaries[j]
                best = (int(f), float((sv[b] + sv[b + 1]) / 2.0))
        return best

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=np.int64)
        for i, row in enumerate(X):
            node = self.nodes[0]
            while node[0] == "split":
                _, f, thr, left, right = node
                node = self.nodes[left] if row[f] <= thr else self.nodes[right]
            out[i] = node[1]
        return out


class RandomForestModel(TrainedClassifier):
    """Bagged trees; scores are tree-vote fractions."""

    def __init__(self, spec, X, y, class_count):
        self.class_count = class_count
        self.input_dim = X.shape[1]
        max_features = spec.max_features
        if max_features is None:
            max_features = int(math.ceil(math.log2(X.shape[1]))) + 1 if X.shape[1] > 1 else 1
        max_features = min(max(1, max_features), X.shape[1])
        seeds = np.random.SeedSequence(spec.seed if spec.seed is not None else 0).spawn(spec.trees)
        self.trees = []
        n = X.shape[0]
        for ss in seeds:
            rng = np.random.default_rng(ss)
            if spec.bootstrap:
                # A bootstrap draw may drop a rare class; that tree then
                # simply never votes for it.
                sample = rng.integers(0, n, size=n)
                Xb, yb = X[sample], y[sample]
            else:
                Xb, yb = X, y
            self.trees.append(DecisionTree(max_features, rng).fit(Xb, yb, class_count))

    def _scores(self, Q: np.ndarray) -> np.ndarray:
        votes = np.zeros((Q.shape[0], self.class_count))
        for tree in self.trees:
            pred = tree.predict(Q)
            votes[np.arange(Q.shape[0]), pred] += 1.0
        return votes / len(self.trees)


# Feed-forward network


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class MlpModel(TrainedClassifier):
    """One sigmoid hidden layer, sigmoid outputs, squared-error objective.

    Training runs ``epochs`` passes over the data; each epoch visits the
    full set once in a freshly shuffled order, applying a per-sample
    gradient step with momentum. Inputs are standardized with training-set
    statistics unless the spec disables it.
    """

    def __init__(self, spec, X, y, class_count):
        self.class_count = class_count
        self.input_dim = X.shape[1]
        self.spec = spec
        if spec.standardize:
            self.offset = X.mean(axis=0)
            scale = X.std(axis=0, ddof=0)
            scale[scale == 0] = 1.0
            self.scale = scale
        else:
            self.offset = np.zeros(X.shape[1])
            self.scale = np.ones(X.shape[1])
        Xs = (X - self.offset) / self.scale
        targets = np.zeros((X.shape[0], class_count))
        targets[np.arange(X.shape[0]), y] = 1.0

        hidden = spec.hidden_units
        if hidden is None:
            hidden = math.ceil((self.input_dim + class_count) / 2)
        rng = np.random.default_rng(spec.seed if spec.seed is not None else 0)
        d = self.input_dim
        self.W1 = rng.uniform(-0.5, 0.5, size=(d, hidden)) / math.sqrt(max(d, 1))
        self.b1 = np.zeros(hidden)
        self.W2 = rng.uniform(-0.5, 0.5, size=(hidden, class_count)) / math.sqrt(hidden)
        self.b2 = np.zeros(class_count)

        vW1 = np.zeros_like(self.W1)
        vb1 = np.zeros_like(self.b1)
        vW2 = np.zeros_like(self.W2)
        vb2 = np.zeros_like(self.b2)
        lr, mom = spec.learning_rate, spec.momentum
        n = Xs.shape[0]
        for _ in range(spec.epochs):
            for i in rng.permutation(n):
                _, grads = self._loss_and_grads(Xs[i : i + 1], targets[i : i + 1])
                gW1, gb1, gW2, gb2 = grads
                vW1 = mom * vW1 - lr * gW1
                vb1 = mom * vb1 - lr * gb1
                vW2 = mom * vW2 - lr * gW2
                vb2 = mom * vb2 - lr * gb2
                self.W1 += vW1
                self.b1 += vb1
                self.W2 += vW2
                self.b2 += vb2

    def _forward(self, Xs):
        a1 = _sigmoid(Xs @ self.W1 + self.b1)
        out = _sigmoid(a1 @ self.W2 + self.b2)
        return a1, out

    def _loss_and_grads(self, Xs, targets):
        """Summed squared-error loss and its exact gradients on a batch."""
        a1, out = self._forward(Xs)
        diff = out - targets
        loss = 0.5 * float((diff * diff).sum())
        delta2 = diff * out * (1.0 - out)
        gW2 = a1.T @ delta2
        gb2 = delta2.sum(axis=0)
        delta1 = (delta2 @ self.W2.T) * a1 * (1.0 - a1)
        gW1 = Xs.T @ delta1
        gb1 = delta1.sum(axis=0)
        return loss, (gW1, gb1, gW2, gb2)

    def _scores(self, Q: np.ndarray) -> np.ndarray:
        Qs = (Q - self.offset) / self.scale
        _, out = self._forward(Qs)
        return out / out.sum(axis=1, keepdims=True)
