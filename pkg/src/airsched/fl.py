"""Desk-scale federated learning: linear models, non-IID shards, local SGD."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from airsched.scheduler import weights_from_class_counts


@dataclass(frozen=True)
class LocalDataset:
    X: np.ndarray
    y: np.ndarray
    indices: np.ndarray | None = None  # rows of the source dataset, when sharded

    def __post_init__(self):
        if len(self.y) == 0:
            raise ValueError("local dataset must be non-empty")
        if len(self.X) != len(self.y):
            raise ValueError("X and y must have the same number of rows")

    def __len__(self):
        return len(self.y)

    @property
    def class_count(self) -> int:
        return int(np.unique(self.y).size)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    local_iterations: int = 5
    batch_size: int = 32
    rounds: int = 500

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.local_iterations < 1 or self.batch_size < 1 or self.rounds < 1:
            raise ValueError("local_iterations, batch_size and rounds must be >= 1")


class SoftmaxRegression:
    """Multinomial logistic regression with flattened parameters ``[W.ravel(), b]``."""

    def __init__(self, n_features: int, n_classes: int):
        self.n_features = n_features
        self.n_classes = n_classes

    @property
    def dim(self) -> int:
        return (self.n_features + 1) * self.n_classes

    def init(self, rng=None) -> np.ndarray:
        return np.zeros(self.dim)

    def _unpack(self, w):
        f, c = self.n_features, self.n_classes
        return w[: f * c].reshape(f, c), w[f * c :]

    def _probs(self, w, X):
        W, b = self._unpack(w)
        z = X @ W + b
        z = z - z.max(axis=1, keepdims=True)
        p = np.exp(z)
        return p / p.sum(axis=1, keepdims=True)

    def loss(self, w, X, y) -> float:
        W, b = self._unpack(w)
        z = X @ W + b
        zmax = z.max(axis=1, keepdims=True)
        lse = np.log(np.exp(z - zmax).sum(axis=1)) + zmax[:, 0]
        return float(np.mean(lse - z[np.arange(len(y)), y]))

    def grad(self, w, X, y) -> np.ndarray:
        p = self._probs(w, X)
        p[np.arange(len(y)), y] -= 1.0
        p /= len(y)
        return np.concatenate([(X.T @ p).ravel(), p.sum(axis=0)])

    def predict(self, w, X) -> np.ndarray:
        W, b = self._unpack(w)
        return np.argmax(X @ W + b, axis=1)

    def accuracy(self, w, X, y) -> float:
        return float(np.mean(self.predict(w, X) == y))


class LinearRegression:
    """Least squares with per-sample loss ``0.5 (x.w + b - y)^2``."""

    def __init__(self, n_features: int):
        self.n_features = n_features

    @property
    def dim(self) -> int:
        return self.n_features + 1

    def init(self, rng=None) -> np.ndarray:
        return np.zeros(self.dim)

    def _resid(self, w, X, y):
        return X @ w[:-1] + w[-1] - y

    def loss(self, w, X, y) -> float:
        r = self._resid(w, X, y)
        return float(0.5 * np.mean(r**2))

    def grad(self, w, X, y) -> np.ndarray:
        r = self._resid(w, X, y) / len(y)
        return np.concatenate([X.T @ r, [r.sum()]])


def local_loss(model, w, dataset: LocalDataset) -> float:
    return model.loss(w, dataset.X, dataset.y)


def global_loss(model, w, datasets, q, selected=None) -> float:
    """``sum_{n in S} q_n F_n(w)``; all devices when ``selected`` is None."""
    idx = range(len(datasets)) if selected is None else selected
    return float(sum(q[n] * model.loss(w, datasets[n].X, datasets[n].y) for n in idx))


def local_sgd(model, w, dataset: LocalDataset, config: TrainConfig, rng: np.random.Generator):
    """Run the local mini-batch SGD iterations of one round.

    Returns the final local weights and the cumulative update
    ``(w_start - w_end) / lr``.
    """
    w0 = np.asarray(w, dtype=float)
    wk = w0.copy()
    n = len(dataset)
    bs = min(config.batch_size, n)
    for _ in range(config.local_iterations):
        if bs == n:
            idx = np.arange(n)
        else:
            idx = rng.choice(n, size=bs, replace=False)
        wk = wk - config.learning_rate * model.grad(wk, dataset.X[idx], dataset.y[idx])
    return wk, (w0 - wk) / config.learning_rate


def global_update(w, theta_hat, lam):
    return np.asarray(w, float) - lam * np.asarray(theta_hat, float)


def make_gaussian_clusters(n_samples, n_features, n_classes, separation, rng):
    """Isotropic unit-variance clusters around random class centres."""
    centres = rng.normal(0.0, separation, size=(n_classes, n_features))
    y = np.arange(n_samples) % n_classes
    y = rng.permutation(y)
    X = centres[y] + rng.normal(size=(n_samples, n_features))
    return X, y


def load_columnar(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a CSV of numeric feature columns followed by an integer label column.

    A header row is skipped if its first field is not numeric.
    """
    path = Path(path)
    with path.open() as fh:
        first = fh.readline().split(",")[0].strip()
    try:
        float(first)
        skip = 0
    except ValueError:
        skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    X = data[:, :-1]
    y = data[:, -1]
    if not np.all(y == np.round(y)) or np.any(y < 0):
        raise ValueError("label column must hold non-negative integers")
    return X, y.astype(int)


def partition_noniid(X, y, n_devices: int, classes_per_device, rng: np.random.Generator):
    """Shard a labelled dataset so device ``n`` holds exactly ``M_n`` classes.

    Classes are dealt round-robin over a shuffled class order so every class
    lands on at least one device; each class's samples are then split evenly
    among its holders. Returns ``(datasets, q)`` with ``q_n ∝ 2^M_n``.
    """
    y = np.asarray(y)
    counts = np.asarray(classes_per_device, dtype=int)
    if counts.shape != (n_devices,):
        raise ValueError("need one class count per device")
    classes = np.unique(y)
    n_classes = classes.size
    if np.any(counts < 1) or np.any(counts > n_classes):
        raise ValueError(f"each device needs between 1 and {n_classes} classes")
    if counts.sum() < n_classes:
        raise ValueError("class schedule cannot cover every class")

    order = rng.permutation(classes)
    holders: dict[int, list[int]] = {int(c): [] for c in classes}
    device_classes = []
    pos = 0
    for n, m in enumerate(counts):
        own = [int(order[(pos + j) % n_classes]) for j in range(m)]
        pos += m
        device_classes.append(own)
        for c in own:
            holders[c].append(n)

    shards: list[list[np.ndarray]] = [[] for _ in range(n_devices)]
    for c in classes:
        idx = rng.permutation(np.flatnonzero(y == c))
        owners = holders[int(c)]
        if idx.size < len(owners):
            raise ValueError(f"class {c} has fewer samples than devices holding it")
        for owner, part in zip(owners, np.array_split(idx, len(owners))):
            shards[owner].append(part)

    datasets = []
    for parts in shards:
        idx = np.sort(np.concatenate(parts))
        datasets.append(LocalDataset(X=np.asarray(X)[idx], y=y[idx], indices=idx))
    q = weights_from_class_counts([d.class_count for d in datasets])
    return datasets, q
