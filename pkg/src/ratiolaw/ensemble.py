"""Bagging ensembles of logistic models trained on balanced subsets.

Base model k is fit on every minority row plus subset k of the majority rows.
Labels come from the vote rule in :class:`VoteSpec`.  Ranking scores come from
the soft combination of base probabilities by default; ``score="vote_fraction"``
ranks by the fraction of positive base votes instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .balancing import SubsetPlan
from .classifiers import DEFAULT_THRESHOLD, LogisticConfig, LogisticRegression, predict_labels
from .data import (
    ClassCounts,
    Dataset,
    check_non_degenerate,
    class_counts,
    format_float,
    text_sink,
)
from .errors import ConfigError, DataError
from .rng import derive_seed

__all__ = [
    "VoteSpec",
    "EnsembleModel",
    "adaptive_threshold",
    "hard_vote",
    "soft_vote",
    "requires_unanimity",
    "train_ensemble",
]

ADAPTIVE = "adaptive"


def adaptive_threshold(counts: ClassCounts) -> float:
    """Majority share N0 / (N0 + N1) of the training data."""
    if counts.n_majority <= 0 or counts.n_minority <= 0:
        raise DataError(
            f"degenerate class distribution (N0={counts.n_majority}, N1={counts.n_minority})"
        )
    return counts.n_majority / (counts.n_majority + counts.n_minority)


def _matrix(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ConfigError(f"{name}: empty base set, need a K x n matrix with K >= 1")
    return arr


def hard_vote(base_labels, threshold: float) -> np.ndarray:
    """1 where the fraction of positive base votes is at least ``threshold``."""
    votes = _matrix(base_labels, "hard_vote")
    if not np.all((votes == 0) | (votes == 1)):
        raise DataError("base votes must be 0 or 1")
    if not (0.0 <= threshold <= 1.0):
        raise ConfigError(f"threshold must lie in [0, 1], got {threshold}")
    return (votes.mean(axis=0) >= threshold).astype(np.int8)


def soft_vote(base_probs, combine: str = "mean") -> np.ndarray:
    probs = _matrix(base_probs, "soft_vote")
    if not np.all((probs >= 0.0) & (probs <= 1.0)):
        raise DataError("base probabilities must lie in [0, 1]")
    if combine == "mean":
        return probs.mean(axis=0)
    if combine == "max":
        return probs.max(axis=0)
    raise ConfigError(f"soft combine must be 'mean' or 'max', got {combine!r}")


def requires_unanimity(k: int, threshold: float) -> bool:
    """True when K - 1 positive votes out of K fall short of ``threshold``."""
    return k * (1.0 - threshold) < 1.0


@dataclass(frozen=True)
class VoteSpec:
    """How base outputs are combined.

    family     "hard" (vote fraction vs threshold) or "soft" (combined
               probability vs threshold).
    threshold  a number in [0, 1] or "adaptive" (majority share of training
               data).  ``None`` means 0.5.
    combine    "mean" or "max", for soft labels and soft scores.
    score      "soft" or "vote_fraction": what ranking metrics see.
    """

    family: str = "hard"
    threshold: object = ADAPTIVE
    combine: str = "mean"
    score: str = "soft"

    def __post_init__(self):
        if self.family not in ("hard", "soft"):
            raise ConfigError(f"vote family must be 'hard' or 'soft', got {self.family!r}")
        if self.combine not in ("mean", "max"):
            raise ConfigError(f"soft combine must be 'mean' or 'max', got {self.combine!r}")
        if self.score not in ("soft", "vote_fraction"):
            raise ConfigError(f"score must be 'soft' or 'vote_fraction', got {self.score!r}")
        t = self.threshold
        if t is not None and t != ADAPTIVE:
            try:
                t = float(t)
            except (TypeError, ValueError):
                raise ConfigError(f"vote threshold must be a number or 'adaptive', got {t!r}") from None
            if not (0.0 <= t <= 1.0):
                raise ConfigError(f"vote threshold must lie in [0, 1], got {t}")
            object.__setattr__(self, "threshold", t)

    @classmethod
    def parse(cls, text: str, score: str = "soft") -> "VoteSpec":
        """Parse ``hard:adaptive``, ``hard:0.9``, ``soft:mean``, ``soft:max:0.5``."""
        parts = [p.strip() for p in str(text).split(":")]
        family = parts[0]
        if family == "hard":
            threshold = parts[1] if len(parts) > 1 else ADAPTIVE
            if len(parts) > 2:
                raise ConfigError(f"malformed vote spec {text!r}")
            return cls("hard", threshold, "mean", score)
        if family == "soft":
            combine = parts[1] if len(parts) > 1 else "mean"
            threshold = parts[2] if len(parts) > 2 else None
            if len(parts) > 3:
                raise ConfigError(f"malformed vote spec {text!r}")
            return cls("soft", threshold, combine, score)
        raise ConfigError(f"malformed vote spec {text!r}")

    def label(self) -> str:
        if self.family == "hard":
            t = self.threshold if self.threshold is not None else DEFAULT_THRESHOLD
            return f"hard:{t}"
        suffix = "" if self.threshold is None else f":{self.threshold}"
        return f"soft:{self.combine}{suffix}"


@dataclass(frozen=True)
class EnsembleModel:
    base_models: tuple
    vote: VoteSpec
    train_counts: ClassCounts
    base_seeds: tuple = field(default=())

    @property
    def k(self) -> int:
        return len(self.base_models)

    def threshold(self) -> float:
        t = self.vote.threshold
        if t == ADAPTIVE:
            return adaptive_threshold(self.train_counts)
        return DEFAULT_THRESHOLD if t is None else float(t)

    def base_probabilities(self, features) -> np.ndarray:
        return np.vstack([m.predict_proba(features) for m in self.base_models])

    def outputs(self, features) -> dict:
        """Per-sample vote fraction, soft mean, soft max, score and final label."""
        probs = self.base_probabilities(features)
        votes = predict_labels(probs.ravel(), DEFAULT_THRESHOLD).reshape(probs.shape)
        fraction = votes.mean(axis=0)
        soft_mean = soft_vote(probs, "mean")
        soft_max = soft_vote(probs, "max")
        t = self.threshold()
        if self.vote.family == "hard":
            label = hard_vote(votes, t)
        else:
            label = predict_labels(soft_mean if self.vote.combine == "mean" else soft_max, t)
        if self.vote.score == "vote_fraction":
            score = fraction
        else:
            score = soft_mean if self.vote.combine == "mean" else soft_max
        return {
            "base_vote_fraction": fraction,
            "soft_mean": soft_mean,
            "soft_max": soft_max,
            "score": score,
            "final_label": label,
        }

    def scores(self, features) -> np.ndarray:
        return self.outputs(features)["score"]

    def predict(self, features) -> np.ndarray:
        return self.outputs(features)["final_label"]


def train_ensemble(dataset: Dataset, plan: SubsetPlan, base_config: LogisticConfig | None = None,
                   vote: VoteSpec | None = None) -> EnsembleModel:
    """Fit one logistic model per planned subset.

    Base k gets seed ``derive_seed(base_config.seed, k)``.  The adaptive
    threshold uses the class counts of ``dataset`` itself, not of the subsets.
    """
    base_config = base_config if base_config is not None else LogisticConfig()
    vote = vote if vote is not None else VoteSpec()
    counts = class_counts(dataset)
    check_non_degenerate(counts)
    if plan.k < 1:
        raise DataError("plan has no subsets")
    n = dataset.n_samples
    for k in range(plan.k):
        idx = plan.training_indices(k)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise DataError(f"invalid plan index in subset {k}: out of range for {n} rows")
        if np.any(dataset.labels[plan.subsets[k]] != 0) or np.any(dataset.labels[plan.minority] != 1):
            raise DataError(f"invalid plan index in subset {k}: class label mismatch")
    models, seeds = [], []
    for k in range(plan.k):
        seed = derive_seed(base_config.seed, k)
        cfg = LogisticConfig(base_config.learning_rate, base_config.epochs,
                             base_config.l2_penalty, seed)
        models.append(LogisticRegression(cfg).fit(dataset.take(plan.training_indices(k))))
        seeds.append(seed)
    return EnsembleModel(tuple(models), vote, counts, tuple(seeds))


def write_predictions(path, outputs: dict) -> None:
    """CSV: sample_id, base_vote_fraction, soft_mean, soft_max, final_label."""
    with text_sink(path) as fh:
        fh.write("sample_id,base_vote_fraction,soft_mean,soft_max,final_label\n")
        for i, (fr, mn, mx, lab) in enumerate(zip(outputs["base_vote_fraction"], outputs["soft_mean"],
                                                  outputs["soft_max"], outputs["final_label"])):
            fh.write(f"{i},{format_float(fr)},{format_float(mn)},{format_float(mx)},{int(lab)}\n")
