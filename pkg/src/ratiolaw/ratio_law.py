"""Closed-form performance of an ideal random classifier as a function of r.

For a classifier that predicts each class with probability 1/2 on data with
minority/majority ratio ``r`` the positive share is ``r / (1 + r)`` and

    F1(r)    = 2r / (3r + 1)        F1'(r)    = 2 / (3r + 1)^2
    AUPRC(r) = r / (1 + r)          AUPRC'(r) = 1 / (1 + r)^2

Both are strictly increasing on (0, 1] and peak at 1/2 when r = 1.  For small
r they reduce to the linear forms F1 ~ 2r and AUPRC ~ r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .stats import pearson

__all__ = [
    "ExpectedConfusion",
    "LinearFit",
    "InterceptFit",
    "EXTERNAL_TASKS",
    "external_task_points",
    "f1_random",
    "auprc_random",
    "f1_random_derivative",
    "auprc_random_derivative",
    "expected_confusion_random",
    "small_r_error",
    "fit_ratio_law",
    "fit_with_intercept",
]


# Published results on ten external binary tasks: (task, F1, AUPRC, r)
EXTERNAL_TASKS = (
    ("Antimicrobial", 0.8681, 0.9494, 0.3979),
    ("Antibacterial", 0.7814, 0.8547, 0.2411),
    ("Toxic", 0.7859, 0.8797, 0.2209),
    ("Anti_gram_pos", 0.7426, 0.8208, 0.1862),
    ("Anti_gram_neg", 0.7152, 0.7814, 0.1547),
    ("Metabolic", 0.6513, 0.7608, 0.1225),
    ("Anti_mammalian_cell", 0.6287, 0.6892, 0.0934),
    ("Neuropeptide", 0.6109, 0.6753, 0.0617),
    ("Immunological", 0.5565, 0.5771, 0.0518),
    ("Anti_inflammatory", 0.5268, 0.5946, 0.0451),
)


def _check_r(r: float) -> float:
    r = float(r)
    if not (0.0 < r <= 1.0):
        raise DataError(f"r must lie in (0, 1], got {r}; swap class roles for r > 1")
    return r


def f1_random(r: float) -> float:
    r = _check_r(r)
    return 2.0 * r / (3.0 * r + 1.0)


def auprc_random(r: float) -> float:
    r = _check_r(r)
    return r / (1.0 + r)


def f1_random_derivative(r: float) -> float:
    r = _check_r(r)
    return 2.0 / (3.0 * r + 1.0) ** 2


def auprc_random_derivative(r: float) -> float:
    r = _check_r(r)
    return 1.0 / (1.0 + r) ** 2


@dataclass(frozen=True)
class ExpectedConfusion:
    """Confusion cells as fractions of the evaluation population."""

    tp: float
    fp: float
    fn: float
    tn: float


def expected_confusion_random(r: float) -> ExpectedConfusion:
    r = _check_r(r)
    share_pos = r / (1.0 + r)
    share_neg = 1.0 / (1.0 + r)
    return ExpectedConfusion(
        tp=0.5 * share_pos, fp=0.5 * share_neg, fn=0.5 * share_pos, tn=0.5 * share_neg
    )


def small_r_error(r: float) -> dict:
    """Absolute error of the linear approximations F1 ~ 2r and AUPRC ~ r."""
    r = _check_r(r)
    return {
        "f1_abs_err": 6.0 * r * r / (3.0 * r + 1.0),
        "auprc_abs_err": r * r / (1.0 + r),
    }


@dataclass(frozen=True)
class LinearFit:
    coefficient: float
    pearson_r: float
    p_value: float
    n_points: int


@dataclass(frozen=True)
class InterceptFit:
    slope: float
    intercept: float
    n_points: int


def _points(points):
    arr = np.asarray([(float(r), float(m)) for r, m in points], dtype=np.float64).reshape(-1, 2)
    if arr.shape[0] < 2:
        raise DataError(f"a ratio-law fit needs at least 2 points, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DataError("fit points must be finite")
    r, m = arr[:, 0], arr[:, 1]
    if np.all(r == r[0]):
        raise DataError("a ratio-law fit needs r values that are not all identical")
    return r, m


def fit_ratio_law(points) -> LinearFit:
    """Least-squares line through the origin, ``metric = coefficient * r``.

    ``points`` is an iterable of ``(r, metric)`` pairs.  Pearson R and its
    p-value describe the linear association; with exactly two points the
    correlation is +-1 and carries no significance (p = 1).
    """
    r, m = _points(points)
    coefficient = math.fsum((m * r).tolist()) / math.fsum((r * r).tolist())
    n = r.size
    if n == 2:
        if m[0] == m[1]:
            corr = 0.0
        else:
            corr = 1.0 if (r[1] - r[0]) * (m[1] - m[0]) > 0 else -1.0
        return LinearFit(coefficient, corr, 1.0, n)
    if np.all(m == m[0]):
        return LinearFit(coefficient, 0.0, 1.0, n)
    res = pearson(r, m)
    return LinearFit(coefficient, res.statistic, res.p_value, n)


def fit_with_intercept(points) -> InterceptFit:
    """Ordinary least squares with intercept, for diagnostics only."""
    r, m = _points(points)
    dr = r - r.mean()
    slope = float(np.dot(dr, m - m.mean()) / np.dot(dr, dr))
    return InterceptFit(slope, float(m.mean() - slope * r.mean()), r.size)


def external_task_points(metric: str) -> list[tuple[float, float]]:
    """``(r, metric)`` pairs from the built-in external-task fixture."""
    column = {"f1": 1, "auprc": 2}.get(metric.lower())
    if column is None:
        raise DataError(f"the external-task fixture holds f1 and auprc, not {metric!r}")
    return [(row[3], row[column]) for row in EXTERNAL_TASKS]
