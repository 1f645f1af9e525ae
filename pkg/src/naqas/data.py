"""Task datasets, preprocessing, deterministic splits, and angle encoding.

Two benchmark tasks are built in:

* ``binary``  -- 300 synthetic samples, two Gaussian clusters in 3-d
  (centers at +-0.8 per axis, sigma 0.5), labels 0/1, splits 100/100/100.
* ``iris``    -- a stratified 100-sample subsample of the classic
  150-flower table bundled with the package; the four raw measurements
  are augmented with the three adjacent-feature products, giving 7
  features; splits 40/30/30.

All features are min-max scaled per feature to [0, pi] and used directly
as rotation angles by the encoding layer.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .sim import encoding_gates


@dataclass(frozen=True)
class TaskSpec:
    name: str
    n_qubits: int
    n_heads: int
    n_classes: int
    feature_dim: int
    split_sizes: tuple[int, int, int]
    min_layers: int = 5
    max_layers: int = 10


BINARY_TASK = TaskSpec("binary", n_qubits=3, n_heads=5, n_classes=2,
                       feature_dim=3, split_sizes=(100, 100, 100))
IRIS_TASK = TaskSpec("iris", n_qubits=4, n_heads=5, n_classes=3,
                     feature_dim=7, split_sizes=(40, 30, 30))
TASKS = {t.name: t for t in (BINARY_TASK, IRIS_TASK)}


@dataclass(frozen=True)
class Dataset:
    """Scaled feature matrix plus disjoint, stratified split indices."""

    features: np.ndarray          # (n, feature_dim), values in [0, pi]
    labels: np.ndarray            # (n,) int class ids
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def split(self, which: str) -> tuple[np.ndarray, np.ndarray]:
        idx = {"train": self.train_idx, "val": self.val_idx, "test": self.test_idx}[which]
        return self.features[idx], self.labels[idx]

    @property
    def n_samples(self) -> int:
        return self.labels.size


def _minmax_to_pi(x: np.ndarray) -> np.ndarray:
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    span[span == 0.0] = 1.0
    return (x - lo) / span * np.pi


def _stratified_split(labels: np.ndarray, sizes: tuple[int, int, int],
                      rng: np.random.Generator):
    """Partition indices into three disjoint, label-stratified groups.

    Per-class allocations use largest-remainder rounding so the group
    sizes come out exactly as requested.
    """
    n = labels.size
    if sum(sizes) != n:
        raise ValueError(f"split sizes {sizes} do not sum to {n}")
    classes = np.unique(labels)
    per_class = {c: rng.permutation(np.flatnonzero(labels == c)) for c in classes}
    groups = [[], [], []]
    offsets = {c: 0 for c in classes}
    remaining = {c: per_class[c].size for c in classes}
    for gi, size in enumerate(sizes):
        total_left = sum(remaining.values())
        quotas = {}
        fracs = []
        for c in classes:
            exact = size * remaining[c] / total_left if total_left else 0.0
            quotas[c] = int(exact)
            fracs.append((exact - int(exact), c))
        shortfall = size - sum(quotas.values())
        for _, c in sorted(fracs, key=lambda t: (-t[0], t[1]))[:shortfall]:
            quotas[c] += 1
        for c in classes:
            take = per_class[c][offsets[c]:offsets[c] + quotas[c]]
            groups[gi].extend(int(i) for i in take)
            offsets[c] += quotas[c]
            remaining[c] -= quotas[c]
    return tuple(np.array(sorted(g), dtype=int) for g in groups)


def make_binary_dataset(seed: int = 0) -> Dataset:
    """Two seeded Gaussian clusters, 150 samples per class, shuffled."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB1]))
    center = np.full(3, 0.8)
    x0 = rng.normal(loc=center, scale=0.5, size=(150, 3))
    x1 = rng.normal(loc=-center, scale=0.5, size=(150, 3))
    features = np.vstack([x0, x1])
    labels = np.array([0] * 150 + [1] * 150)
    order = rng.permutation(300)
    features, labels = features[order], labels[order]
    features = _minmax_to_pi(features)
    tr, va, te = _stratified_split(labels, BINARY_TASK.split_sizes, rng)
    return Dataset(features, labels, tr, va, te)


def load_iris_table() -> tuple[np.ndarray, np.ndarray]:
    """Load the bundled 150-sample iris table (4 features, labels 0..2)."""
    try:
        text = resources.files("naqas").joinpath("iris.csv").read_text()
    except FileNotFoundError as exc:
        raise RuntimeError("bundled iris.csv is missing from the package") from exc
    rows = list(csv.reader(text.strip().splitlines()))
    if rows[0] != ["sepal_length", "sepal_width", "petal_length", "petal_width", "label"]:
        raise RuntimeError("bundled iris.csv has an unexpected header")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise RuntimeError(f"bundled iris.csv is corrupt: {exc}") from exc
    if data.shape != (150, 5):
        raise RuntimeError(f"bundled iris.csv has shape {data.shape}, expected (150, 5)")
    return data[:, :4], data[:, 4].astype(int)


def make_iris_dataset(seed: int = 0) -> Dataset:
    """100-sample stratified subsample with adjacent-feature products.

    The three extra features are the products of raw feature pairs
    (0,1), (1,2), (2,3), computed before scaling; all seven columns are
    then min-max scaled to [0, pi].
    """
    raw, labels_all = load_iris_table()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1B15]))
    keep_idx, _, _ = _stratified_split(labels_all, (100, 25, 25), rng)
    raw, labels = raw[keep_idx], labels_all[keep_idx]
    products = raw[:, :-1] * raw[:, 1:]
    features = _minmax_to_pi(np.hstack([raw, products]))
    tr, va, te = _stratified_split(labels, IRIS_TASK.split_sizes, rng)
    return Dataset(features, labels, tr, va, te)


def make_dataset(spec: TaskSpec, seed: int = 0) -> Dataset:
    if spec.name == "binary":
        return make_binary_dataset(seed)
    if spec.name == "iris":
        return make_iris_dataset(seed)
    raise ValueError(f"unknown task {spec.name!r}")


def encode_sample(features: Sequence[float], spec: TaskSpec):
    """Per-gate encoding instructions for one sample.

    Returns a list of (kind, qubit, angle): RY(x_i) on qubit i for the
    first Q features, then RZ for the remainder assigned cyclically.
    """
    features = np.asarray(features, dtype=float)
    if features.shape != (spec.feature_dim,):
        raise ValueError(f"expected {spec.feature_dim} features, got shape {features.shape}")
    gates = encoding_gates(spec.feature_dim, spec.n_qubits)
    return [(g.kind, g.target, float(a)) for g, a in zip(gates, features)]
