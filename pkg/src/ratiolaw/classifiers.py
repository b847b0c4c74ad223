"""Probabilistic classifiers: logistic regression and random baselines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .data import ClassCounts, Dataset, class_counts
from .errors import ConfigError, DataError
from .rng import generator

__all__ = [
    "ProbabilisticClassifier",
    "LogisticConfig",
    "LogisticRegression",
    "fit_logistic",
    "DummyStrategy",
    "dummy_predict",
    "predict_labels",
    "DEFAULT_THRESHOLD",
    "DUMMY_JITTER",
]

DEFAULT_THRESHOLD = 0.5
DUMMY_JITTER = 1e-6


class ProbabilisticClassifier(Protocol):
    def fit(self, dataset: Dataset) -> "ProbabilisticClassifier": ...

    def predict_proba(self, features) -> np.ndarray: ...

    def predict(self, features, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray: ...


def predict_labels(probs, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Label 1 exactly where ``probs >= threshold``."""
    p = np.asarray(probs, dtype=np.float64)
    if not (0.0 <= threshold <= 1.0):
        raise ConfigError(f"threshold must lie in [0, 1], got {threshold}")
    if p.size and not np.all((p >= 0.0) & (p <= 1.0)):
        raise DataError("probabilities must lie in [0, 1]")
    return (p >= threshold).astype(np.int8)


def _sigmoid(z):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True)
class LogisticConfig:
    learning_rate: float = 0.1
    epochs: int = 300
    l2_penalty: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if int(self.epochs) < 0:
            raise ConfigError(f"epochs must be nonnegative, got {self.epochs}")
        if not self.l2_penalty >= 0:
            raise ConfigError(f"l2_penalty must be nonnegative, got {self.l2_penalty}")


class LogisticRegression:
    """L2-regularised logistic regression trained by full-batch gradient descent.

    Features are standardised with the training mean and standard deviation
    (constant columns keep scale 1); the fitted statistics travel with the
    model.  Weights and bias start at zero, so the fit is fully deterministic.
    ``config.seed`` is accepted for interface uniformity and never consumed.

    Parameters
    ----------
    config : LogisticConfig
    track_loss : bool
        Record the regularised training loss before every epoch and after the
        last one in ``loss_history_``.
    """

    def __init__(self, config: LogisticConfig | None = None, track_loss: bool = False):
        self.config = config if config is not None else LogisticConfig()
        self.track_loss = track_loss
        self.weights_ = None
        self.bias_ = None
        self.mean_ = None
        self.scale_ = None
        self.loss_history_ = None

    def _loss(self, xs, y, w, b) -> float:
        z = xs @ w + b
        data = float(np.mean(np.logaddexp(0.0, z) - y * z))
        return data + 0.5 * self.config.l2_penalty * float(np.dot(w, w))

    def fit(self, dataset: Dataset) -> "LogisticRegression":
        counts = class_counts(dataset)
        if counts.n_majority == 0 or counts.n_minority == 0:
            raise DataError(
                f"degenerate class distribution (N0={counts.n_majority}, N1={counts.n_minority})"
            )
        x = dataset.features
        y = dataset.labels.astype(np.float64)
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0.0] = 1.0
        xs = (x - mean) / scale
        n = xs.shape[0]
        w = np.zeros(xs.shape[1])
        b = 0.0
        lr = self.config.learning_rate
        lam = self.config.l2_penalty
        history = [] if self.track_loss else None
        for _ in range(int(self.config.epochs)):
            if history is not None:
                history.append(self._loss(xs, y, w, b))
            residual = _sigmoid(xs @ w + b) - y
            grad_w = xs.T @ residual / n + lam * w
            grad_b = float(residual.sum()) / n
            w = w - lr * grad_w
            b = b - lr * grad_b
        if history is not None:
            history.append(self._loss(xs, y, w, b))
        self.weights_, self.bias_ = w, float(b)
        self.mean_, self.scale_ = mean, scale
        self.loss_history_ = history
        for arr in (self.weights_, self.mean_, self.scale_):
            arr.setflags(write=False)
        return self

    def _check_fitted(self):
        if self.weights_ is None:
            raise ConfigError("model is not fitted")

    def decision_function(self, features) -> np.ndarray:
        self._check_fitted()
        x = np.asarray(features, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.shape[1] != self.weights_.size:
            raise DataError(f"expected {self.weights_.size} features, got {x.shape[1]}")
        return ((x - self.mean_) / self.scale_) @ self.weights_ + self.bias_

    def predict_proba(self, features) -> np.ndarray:
        return _sigmoid(self.decision_function(features))

    def predict(self, features, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
        return predict_labels(self.predict_proba(features), threshold)

    # Text block: weights, bias, mean, scale -- one comma-separated line each.
    def to_text(self) -> str:
        self._check_fitted()
        fmt = lambda values: ",".join(format(float(v), ".17g") for v in values)  # noqa: E731
        return "\n".join(
            [fmt(self.weights_), fmt([self.bias_]), fmt(self.mean_), fmt(self.scale_)]
        ) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LogisticRegression":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if len(lines) != 4:
            raise DataError(f"model text must have 4 lines, found {len(lines)}")
        try:
            rows = [np.array([float(v) for v in ln.split(",")]) for ln in lines]
        except ValueError as exc:
            raise DataError(f"malformed model text: {exc}") from None
        w, b, mean, scale = rows
        if b.size != 1 or not (w.size == mean.size == scale.size):
            raise DataError("model text has inconsistent vector lengths")
        model = cls()
        model.weights_, model.bias_, model.mean_, model.scale_ = w, float(b[0]), mean, scale
        return model


def fit_logistic(dataset: Dataset, config: LogisticConfig | None = None) -> LogisticRegression:
    return LogisticRegression(config).fit(dataset)


@dataclass(frozen=True)
class DummyStrategy:
    kind: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("stratified", "uniform"):
            raise ConfigError(f"dummy strategy must be 'stratified' or 'uniform', got {self.kind!r}")


def dummy_predict(strategy: DummyStrategy, train_counts: ClassCounts, n_eval: int):
    """Random-baseline predictions for ``n_eval`` samples.

    Returns ``(scores, labels)``.  Each label is a Bernoulli draw with the
    strategy's positive probability (the training prior for ``stratified``,
    1/2 for ``uniform``); each score is that probability plus an independent
    uniform jitter of at most ``DUMMY_JITTER``, so rankings are random.
    """
    n_eval = int(n_eval)
    if n_eval < 0:
        raise ConfigError("n_eval must be nonnegative")
    if strategy.kind == "stratified":
        total = train_counts.n_majority + train_counts.n_minority
        if train_counts.n_majority <= 0 or train_counts.n_minority <= 0:
            raise DataError(
                "degenerate class distribution: stratified dummy needs both classes in training"
            )
        p_pos = train_counts.n_minority / total
    else:
        p_pos = 0.5
    rng = generator(strategy.seed)
    labels = (rng.random(n_eval) < p_pos).astype(np.int8)
    scores = p_pos + rng.uniform(-DUMMY_JITTER, DUMMY_JITTER, n_eval)
    return scores, labels
