"""Datasets, class counting, synthetic generation, CSV I/O and stratified folds.

Label 1 is always the minority (positive) class and label 0 the majority
(negative) class.  Datasets are immutable: the underlying arrays are marked
read-only at construction.
"""

from __future__ import annotations

import contextlib
import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .rng import generator

__all__ = [
    "Dataset",
    "ClassCounts",
    "GeneratorConfig",
    "class_counts",
    "imbalance_ratio",
    "check_non_degenerate",
    "generate_synthetic",
    "stratified_kfold",
    "load_csv",
    "save_csv",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``features`` (n x p) with binary ``labels`` (length n)."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64, copy=True)
        y = np.array(self.labels, copy=True)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise DataError(f"features must be an n x p matrix with n, p >= 1, got shape {x.shape}")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise DataError(
                f"label count {y.shape[0] if y.ndim == 1 else y.shape} does not match "
                f"feature rows {x.shape[0]}"
            )
        if not np.all(np.isfinite(x)):
            raise DataError("features contain NaN or infinite values")
        if not np.all((y == 0) | (y == 1)):
            raise DataError("label outside {0,1}")
        y = y.astype(np.int8)
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.n_samples

    def take(self, indices) -> Dataset:
        """Rows at ``indices`` (repeats allowed) as a new dataset."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.labels[idx])

    def equals(self, other: Dataset) -> bool:
        return (
            self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class ClassCounts:
    n_majority: int
    n_minority: int

    @property
    def total(self) -> int:
        return self.n_majority + self.n_minority


@dataclass(frozen=True)
class GeneratorConfig:
    """Two isotropic unit-variance Gaussian classes.

    The minority mean sits ``separation`` units from the majority mean along
    the first axis; all other coordinates share mean zero.
    """

    n_total: int
    dim: int = 20
    ratio: float = 1.0
    separation: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n_total) < 1:
            raise ConfigError(f"n_total must be positive, got {self.n_total}")
        if int(self.dim) < 1:
            raise ConfigError(f"dim must be positive, got {self.dim}")
        if not (0.0 < self.ratio <= 1.0):
            raise ConfigError(f"ratio must lie in (0, 1], got {self.ratio}")
        if not (self.separation >= 0.0 and math.isfinite(self.separation)):
            raise ConfigError(f"separation must be a finite nonnegative real, got {self.separation}")


def class_counts(dataset: Dataset) -> ClassCounts:
    n_minority = int(np.count_nonzero(dataset.labels))
    return ClassCounts(n_majority=dataset.n_samples - n_minority, n_minority=n_minority)


def check_non_degenerate(counts: ClassCounts) -> None:
    """Raise unless both classes are present and label 1 is not the majority."""
    if counts.n_majority <= 0 or counts.n_minority <= 0:
        raise DataError(
            f"degenerate class distribution (N0={counts.n_majority}, N1={counts.n_minority})"
        )
    if counts.n_minority > counts.n_majority:
        raise DataError(
            f"minority label convention violated: N1={counts.n_minority} > N0={counts.n_majority}"
        )


def imbalance_ratio(counts: ClassCounts) -> float:
    """Minority-to-majority ratio ``N1 / N0``, in (0, 1]."""
    check_non_degenerate(counts)
    return counts.n_minority / counts.n_majority


def minority_size(n_total: int, ratio: float) -> int:
    # Python's round() is round-half-to-even
    return int(round(n_total * ratio / (1.0 + ratio)))


def generate_synthetic(config: GeneratorConfig) -> Dataset:
    n_total = int(config.n_total)
    n_min = minority_size(n_total, config.ratio)
    n_maj = n_total - n_min
    if n_min == 0 or n_maj == 0:
        raise DataError(
            f"ratio unrealizable at this n: n_total={n_total}, ratio={config.ratio} "
            f"gives N1={n_min}, N0={n_maj}"
        )
    rng = generator(config.seed)
    x = rng.standard_normal((n_total, int(config.dim)))
    y = np.zeros(n_total, dtype=np.int8)
    y[n_maj:] = 1
    x[n_maj:, 0] += config.separation
    order = rng.permutation(n_total)
    return Dataset(x[order], y[order])


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> np.ndarray:
    """Fold index in ``[0, k)`` for every sample.

    Each class is shuffled and dealt round-robin; the majority deal continues
    where the minority deal stopped, so fold sizes differ by at most one and
    every fold's minority count is within one sample of its share.
    """
    k = int(k)
    if k < 2:
        raise ConfigError(f"k must be at least 2, got {k}")
    counts = class_counts(dataset)
    if counts.n_minority < k or counts.n_majority < k:
        raise DataError(
            f"insufficient samples for stratified folds: k={k}, "
            f"N1={counts.n_minority}, N0={counts.n_majority}"
        )
    rng = generator(seed)
    pos = np.flatnonzero(dataset.labels == 1)
    neg = np.flatnonzero(dataset.labels == 0)
    dealt = np.concatenate([rng.permutation(pos), rng.permutation(neg)])
    folds = np.empty(dataset.n_samples, dtype=np.int64)
    folds[dealt] = np.arange(dealt.size) % k
    return folds


def iter_folds(folds: np.ndarray):
    """Yield ``(fold, train_idx, valid_idx)`` for every fold index."""
    for f in range(int(folds.max()) + 1):
        valid = np.flatnonzero(folds == f)
        train = np.flatnonzero(folds != f)
        yield f, train, valid


# -- CSV -----------------------------------------------------------------

def format_float(value: float) -> str:
    return format(float(value), ".17g")


@contextlib.contextmanager
def text_sink(target):
    """Yield a writable text handle for a path or an already-open handle."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            yield fh


def save_csv(dataset: Dataset, path, feature_names=None) -> None:
    """Header ``x0..x{p-1},label``; ``path`` may also be an open text handle."""
    names = list(feature_names) if feature_names is not None else [
        f"x{j}" for j in range(dataset.n_features)
    ]
    if len(names) != dataset.n_features:
        raise ConfigError("feature_names length does not match feature count")
    with text_sink(path) as fh:
        fh.write(",".join(names + ["label"]) + "\n")
        for row, label in zip(dataset.features, dataset.labels):
            fh.write(",".join(format_float(v) for v in row) + f",{int(label)}\n")


def load_csv(path) -> Dataset:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if "label" not in header:
            raise DataError(f"{path}: missing `label` column")
        label_col = header.index("label")
        feature_cols = [j for j in range(len(header)) if j != label_col]
        if not feature_cols:
            raise DataError(f"{path}: no feature columns")
        rows, labels = [], []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(
                    f"{path}: row {lineno} has {len(record)} cells, header has {len(header)}"
                )
            raw_label = record[label_col].strip()
            if raw_label not in ("0", "1"):
                raise DataError(f"{path}: row {lineno}: label outside {{0,1}}: {raw_label!r}")
            values = []
            for j in feature_cols:
                cell = record[j].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric feature cell {cell!r} at row {lineno}, "
                        f"column {header[j]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: non-finite feature cell {cell!r} at row {lineno}, "
                        f"column {header[j]!r}"
                    )
                values.append(v)
            rows.append(values)
            labels.append(int(raw_label))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(rows, dtype=np.float64), np.array(labels, dtype=np.int8))


def feature_names(path) -> list[str]:
    with open(path, encoding="utf-8", newline="") as fh:
        header = next(csv.reader(fh))
    return [h.strip() for h in header if h.strip() != "label"]
