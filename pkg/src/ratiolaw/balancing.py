"""Dataset balancing transforms and balanced-subset plans for bagging.

Every transform returns a new dataset with equal class counts and never
touches its input.  Row provenance is available through the ``*_indices``
helpers and :func:`balance`, which report for each output row the input row it
came from (for SMOTE rows: the base point, plus its interpolation partner).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import (
    ClassCounts,
    Dataset,
    check_non_degenerate,
    class_counts,
    format_float,
    text_sink,
)
from .errors import ConfigError, DataError
from .rng import generator

__all__ = [
    "SmoteConfig",
    "SmoteProvenance",
    "SubsetPlan",
    "Resampled",
    "WITHOUT_REPLACEMENT",
    "WITH_REPLACEMENT",
    "undersample",
    "oversample",
    "smote",
    "smote_with_provenance",
    "interpolate",
    "num_base_classifiers",
    "plan_balanced_subsets",
    "balance",
]

WITHOUT_REPLACEMENT = "without_replacement"
WITH_REPLACEMENT = "with_replacement"
DEFAULT_THETA = 0.05


def _split(dataset: Dataset):
    check_non_degenerate(class_counts(dataset))
    return np.flatnonzero(dataset.labels == 1), np.flatnonzero(dataset.labels == 0)


# -- undersampling / oversampling --------------------------------------------

def undersample_indices(dataset: Dataset, seed: int) -> np.ndarray:
    """All minority rows plus N1 distinct random majority rows, in input order."""
    pos, neg = _split(dataset)
    keep = generator(seed).choice(neg, size=pos.size, replace=False)
    return np.sort(np.concatenate([pos, keep]))


def undersample(dataset: Dataset, seed: int) -> Dataset:
    return dataset.take(undersample_indices(dataset, seed))


def oversample_indices(dataset: Dataset, seed: int) -> np.ndarray:
    """Every input row, then N0 - N1 minority copies.

    Copies cycle through a seeded shuffle of the minority rows, so each
    original is copied once before any is copied twice.
    """
    pos, neg = _split(dataset)
    n_add = neg.size - pos.size
    order = generator(seed).permutation(pos)
    extra = order[np.arange(n_add) % pos.size]
    return np.concatenate([np.arange(dataset.n_samples), extra])


def oversample(dataset: Dataset, seed: int) -> Dataset:
    return dataset.take(oversample_indices(dataset, seed))


# -- SMOTE ---------------------------------------------------------------------

@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if int(self.k_neighbors) < 1:
            raise ConfigError(f"k_neighbors must be at least 1, got {self.k_neighbors}")


@dataclass(frozen=True)
class SmoteProvenance:
    """For synthetic row j (output row ``n_input + j``): base row, partner row, lambda."""

    parent_i: np.ndarray
    parent_k: np.ndarray
    lam: np.ndarray
    n_input: int

    def to_csv(self, path) -> None:
        with text_sink(path) as fh:
            fh.write("synthetic_row,parent_i,parent_k,lambda\n")
            for j, (i, k, lam) in enumerate(zip(self.parent_i, self.parent_k, self.lam)):
                fh.write(f"{self.n_input + j},{int(i)},{int(k)},{format_float(lam)}\n")


def interpolate(x_i, x_k, lam):
    """Point(s) at fraction ``lam`` along the segment from ``x_i`` to ``x_k``."""
    x_i = np.asarray(x_i, dtype=np.float64)
    x_k = np.asarray(x_k, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    if lam.ndim:
        lam = lam[:, None]
    return x_i + lam * (x_k - x_i)


def _nearest_neighbors(points: np.ndarray, k: int, chunk: int = 1024) -> np.ndarray:
    """k nearest other points by Euclidean distance; ties go to the lower index."""
    m = points.shape[0]
    out = np.empty((m, k), dtype=np.intp)
    for start in range(0, m, chunk):
        block = points[start:start + chunk]
        d2 = ((block[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        rows = np.arange(block.shape[0])
        d2[rows, start + rows] = np.inf
        out[start:start + chunk] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def smote_with_provenance(dataset: Dataset, config: SmoteConfig | None = None):
    """SMOTE oversampling to N0 minority rows; returns ``(dataset, provenance)``."""
    config = config if config is not None else SmoteConfig()
    counts = class_counts(dataset)
    if counts.n_minority < 2:
        raise DataError(f"SMOTE requires >= 2 minority samples, got {counts.n_minority}")
    pos, neg = _split(dataset)
    k = int(config.k_neighbors)
    if k > pos.size - 1:
        warnings.warn(
            f"k_neighbors={k} exceeds N1 - 1 = {pos.size - 1}; clamping",
            RuntimeWarning,
            stacklevel=2,
        )
        k = pos.size - 1
    n_syn = neg.size - pos.size
    minority = dataset.features[pos]
    neighbors = _nearest_neighbors(minority, k)
    rng = generator(config.seed)
    base = rng.integers(0, pos.size, n_syn)
    pick = rng.integers(0, k, n_syn)
    lam = rng.random(n_syn)
    partner = neighbors[base, pick]
    synthetic = interpolate(minority[base], minority[partner], lam)
    out = Dataset(
        np.vstack([dataset.features, synthetic]),
        np.concatenate([dataset.labels, np.ones(n_syn, dtype=np.int8)]),
    )
    prov = SmoteProvenance(parent_i=pos[base], parent_k=pos[partner], lam=lam,
                           n_input=dataset.n_samples)
    return out, prov


def smote(dataset: Dataset, config: SmoteConfig | None = None) -> Dataset:
    return smote_with_provenance(dataset, config)[0]


# -- bagging plans -------------------------------------------------------------

def _check_mode(mode: str) -> str:
    if mode not in (WITHOUT_REPLACEMENT, WITH_REPLACEMENT):
        raise ConfigError(
            f"mode must be {WITHOUT_REPLACEMENT!r} or {WITH_REPLACEMENT!r}, got {mode!r}"
        )
    return mode


def num_base_classifiers(counts: ClassCounts, mode: str, theta: float = DEFAULT_THETA) -> int:
    """Number of balanced subsets K.

    Without replacement K = ceil(N0 / N1).  With replacement K is the smallest
    integer for which a given majority row is missed by every subset with
    probability (1 - N1/N0)^K < theta; K = 1 when N1 = N0.
    """
    check_non_degenerate(counts)
    _check_mode(mode)
    if not (0.0 < theta < 1.0):
        raise ConfigError(f"theta must lie in (0, 1), got {theta}")
    n0, n1 = counts.n_majority, counts.n_minority
    if mode == WITHOUT_REPLACEMENT:
        return -(-n0 // n1)
    if n1 == n0:
        return 1
    miss = 1.0 - n1 / n0
    k = max(1, math.ceil(math.log(theta) / math.log(miss)))
    while miss ** k >= theta:
        k += 1
    while k > 1 and miss ** (k - 1) < theta:
        k -= 1
    return k


@dataclass(frozen=True)
class SubsetPlan:
    """K majority-row index lists, each of length N1, plus the minority rows.

    Indices are row numbers of the source dataset.
    """

    subsets: tuple
    minority: np.ndarray
    mode: str
    theta: float

    @property
    def k(self) -> int:
        return len(self.subsets)

    def training_indices(self, k: int) -> np.ndarray:
        return np.concatenate([self.minority, self.subsets[k]])

    def to_csv(self, path) -> None:
        with text_sink(path) as fh:
            fh.write("subset_id,majority_row_index\n")
            for sid, rows in enumerate(self.subsets):
                for row in rows:
                    fh.write(f"{sid},{int(row)}\n")

    @classmethod
    def from_csv(cls, path, dataset: Dataset, mode: str = WITHOUT_REPLACEMENT,
                 theta: float = DEFAULT_THETA) -> "SubsetPlan":
        groups: dict[int, list[int]] = {}
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                groups.setdefault(int(rec["subset_id"]), []).append(int(rec["majority_row_index"]))
        subsets = tuple(np.array(groups[s], dtype=np.intp) for s in sorted(groups))
        return cls(subsets, np.flatnonzero(dataset.labels == 1), _check_mode(mode), theta)


def plan_balanced_subsets(dataset: Dataset, mode: str = WITHOUT_REPLACEMENT,
                          theta: float = DEFAULT_THETA, seed: int = 0) -> SubsetPlan:
    """Split the majority class into K subsets of N1 rows each.

    Without replacement the shuffled majority rows are dealt into consecutive
    blocks of N1.  When N1 does not divide N0 the final block is short; it is
    topped up with distinct rows drawn from those already dealt to earlier
    blocks, so every subset stays balanced and reuse happens only there.

    With replacement each subset is an independent draw of N1 distinct
    majority rows, so rows recur across subsets and a given row is missed by
    all K subsets with probability (1 - N1/N0)^K.
    """
    pos, neg = _split(dataset)
    counts = ClassCounts(n_majority=neg.size, n_minority=pos.size)
    k = num_base_classifiers(counts, mode, theta)
    n1 = pos.size
    rng = generator(seed)
    if mode == WITHOUT_REPLACEMENT:
        shuffled = rng.permutation(neg)
        subsets = [shuffled[i * n1:(i + 1) * n1] for i in range(k)]
        shortfall = n1 - subsets[-1].size
        if shortfall:
            used = shuffled[:(k - 1) * n1]
            top_up = rng.choice(used, size=shortfall, replace=False)
            subsets[-1] = np.concatenate([subsets[-1], top_up])
    else:
        subsets = [rng.choice(neg, size=n1, replace=False) for _ in range(k)]
    return SubsetPlan(tuple(subsets), pos, mode, float(theta))


# -- dispatch used by the experiment harness ---------------------------------

class Resampled(NamedTuple):
    dataset: Dataset
    origin: np.ndarray   # input row behind each output row
    partner: np.ndarray  # SMOTE interpolation partner, -1 for copied rows


BALANCING_METHODS = ("unbalanced", "undersample", "oversample", "smote")


def balance(dataset: Dataset, method: str, seed: int, smote_k: int = 5) -> Resampled:
    if method == "unbalanced":
        idx = np.arange(dataset.n_samples)
    elif method == "undersample":
        idx = undersample_indices(dataset, seed)
    elif method == "oversample":
        idx = oversample_indices(dataset, seed)
    elif method == "smote":
        out, prov = smote_with_provenance(dataset, SmoteConfig(smote_k, seed))
        origin = np.concatenate([np.arange(dataset.n_samples), prov.parent_i])
        partner = np.concatenate([np.full(dataset.n_samples, -1), prov.parent_k])
        return Resampled(out, origin, partner)
    else:
        raise ConfigError(f"unknown balancing method {method!r}")
    return Resampled(dataset.take(idx), idx, np.full(idx.size, -1))
