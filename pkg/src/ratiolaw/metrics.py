"""Confusion counts, threshold metrics, and the two ranking metrics.

Zero-division conventions (recorded in ``MetricsReport.flags``)::

    precision = 0  when tp + fp == 0
    recall    = 0  when tp + fn == 0
    f1        = 0  when precision + recall == 0
    fpr       = 0  when fp + tn == 0

Ranking metrics treat tied scores as one atomic group; no order inside a tie
is ever consulted.  AUPRC is the average-precision step sum over descending
distinct thresholds, not a trapezoidal area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = [
    "ConfusionCounts",
    "PointMetrics",
    "MetricsReport",
    "METRIC_COLUMNS",
    "confusion",
    "point_metrics",
    "auroc",
    "auprc",
    "evaluate",
]

METRIC_COLUMNS = ("accuracy", "precision", "recall", "fpr", "f1", "auroc", "auprc")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class PointMetrics:
    accuracy: float
    precision: float
    recall: float
    fpr: float
    f1: float
    flags: tuple = ()


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    fpr: float
    f1: float
    auroc: float
    auprc: float
    flags: tuple = field(default=())

    def values(self) -> tuple:
        return tuple(getattr(self, name) for name in METRIC_COLUMNS)

    def as_dict(self) -> dict:
        return dict(zip(METRIC_COLUMNS, self.values()))


def _binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional")
    # x * (x - 1) vanishes exactly on {0, 1}
    if arr.size and np.count_nonzero(arr * (arr - 1)):
        raise DataError(f"{name} contains values outside {{0,1}}")
    return arr.astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionCounts:
    t = _binary(y_true, "y_true")
    p = _binary(y_pred, "y_pred")
    if t.shape != p.shape:
        raise DataError(f"length mismatch: y_true has {t.size}, y_pred has {p.size}")
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t == 0) & (p == 1)))
    fn = int(np.sum((t == 1) & (p == 0)))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=t.size - tp - fp - fn)


def point_metrics(c) -> PointMetrics:
    """Accuracy, precision, recall, FPR and F1 from confusion cells.

    ``c`` may hold integer counts or real-valued fractions (any object with
    ``tp``, ``fp``, ``fn``, ``tn`` attributes).
    """
    tp, fp, fn, tn = c.tp, c.fp, c.fn, c.tn
    total = tp + fp + fn + tn
    if total <= 0:
        raise DataError("point metrics need at least one sample")
    flags = []
    accuracy = (tp + tn) / total
    if tp + fp == 0:
        precision = 0.0
        flags.append("precision")
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall = 0.0
        flags.append("recall")
    else:
        recall = tp / (tp + fn)
    if fp + tn == 0:
        fpr = 0.0
        flags.append("fpr")
    else:
        fpr = fp / (fp + tn)
    if precision + recall == 0:
        f1 = 0.0
        flags.append("f1")
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return PointMetrics(
        accuracy=float(accuracy),
        precision=float(precision),
        recall=float(recall),
        fpr=float(fpr),
        f1=float(f1),
        flags=tuple(flags),
    )


def _tie_groups(scores, labels, metric: str):
    """Cumulative positives and sample counts at the end of each tie group.

    Groups are visited in descending score order.  Returns ``(cum_pos,
    cum_size, n_pos, n_neg)``.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _binary(labels, "labels")
    if s.ndim != 1 or s.shape != y.shape:
        raise DataError("scores and labels must be one-dimensional and of equal length")
    if not np.isfinite(s).all():
        raise DataError("scores must be finite")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError(f"{metric} undefined: both classes must be present")
    # order within a tie group never matters, only group totals do
    order = s.argsort()[::-1]
    s_sorted = s[order]
    last = np.empty(s.size, dtype=bool)
    np.not_equal(s_sorted[1:], s_sorted[:-1], out=last[:-1])
    last[-1] = True
    ends = last.nonzero()[0]
    cum_pos = np.cumsum(y[order])[ends]
    return cum_pos, ends + 1, n_pos, n_neg


def _increments(cum):
    out = cum.copy()
    out[1:] -= cum[:-1]
    return out


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC: P(score_pos > score_neg), ties counted half."""
    cum_pos, cum_size, n_pos, n_neg = _tie_groups(scores, labels, "AUROC")
    pos_g = _increments(cum_pos)
    cum_neg = cum_size - cum_pos
    neg_g = _increments(cum_neg)
    # negatives strictly below a group are those not yet seen in descending order
    neg_below = n_neg - cum_neg
    twice_u = int(np.dot(pos_g, 2 * neg_below + neg_g))
    return twice_u / (2 * n_pos * n_neg)


def auprc(scores, labels) -> float:
    """Average precision: sum over thresholds of (recall gain) x precision."""
    cum_pos, cum_size, n_pos, _ = _tie_groups(scores, labels, "AUPRC")
    pos_g = _increments(cum_pos)
    # groups without positives contribute exact zeros
    terms = (pos_g / n_pos) * (cum_pos / cum_size)
    return math.fsum(terms.tolist())


def evaluate(y_true, y_pred, scores) -> MetricsReport:
    """Full report: threshold metrics from ``y_pred``, ranking from ``scores``."""
    pm = point_metrics(confusion(y_true, y_pred))
    return MetricsReport(
        accuracy=pm.accuracy,
        precision=pm.precision,
        recall=pm.recall,
        fpr=pm.fpr,
        f1=pm.f1,
        auroc=auroc(scores, y_true),
        auprc=auprc(scores, y_true),
        flags=pm.flags,
    )
