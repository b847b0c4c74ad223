"""Cross-validated experiment harness: ratio sweeps, method comparison, curves.

Balancing is always applied inside each training split; validation rows are
never resampled.  Every random choice is keyed off the run seed through
:func:`ratiolaw.rng.derive_seed`, so all methods evaluated under one seed see
the same folds, and result files are byte-identical across reruns regardless
of worker count.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .balancing import (
    DEFAULT_THETA,
    WITH_REPLACEMENT,
    WITHOUT_REPLACEMENT,
    balance,
    plan_balanced_subsets,
)
from .classifiers import DummyStrategy, LogisticConfig, LogisticRegression, dummy_predict
from .data import Dataset, GeneratorConfig, class_counts, generate_synthetic, stratified_kfold
from .ensemble import VoteSpec, requires_unanimity, train_ensemble
from .errors import ConfigError, RatioLawError
from .metrics import METRIC_COLUMNS, MetricsReport, evaluate
from .ratio_law import (
    auprc_random,
    auprc_random_derivative,
    f1_random,
    f1_random_derivative,
)
from .rng import derive_seed
from .stats import paired_ttest

log = logging.getLogger(__name__)

METHODS = ("unbalanced", "undersample", "oversample", "smote", "ensemble1", "ensemble2")
MODELS = ("logreg", "dummy_stratified", "dummy_uniform")
TASKS = ("sweep", "compare", "curves", "fit-law", "ttest")
COMPARE_METRICS = ("auprc", "f1", "auroc")

# stream keys under the run seed
_FOLDS, _BALANCE, _MODEL, _PLAN = 0, 1, 2, 3


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "sweep"
    r_grid: tuple = (0.1, 0.25, 0.5, 1.0)
    n_total: int = 5000
    dim: int = 20
    separation: float = 1.0
    seeds: tuple = (0,)
    cv_folds: int = 10
    methods: tuple = ("unbalanced",)
    models: tuple = ("logreg",)
    vote: VoteSpec = field(default_factory=VoteSpec)
    theta: float = DEFAULT_THETA
    smote_k: int = 5
    learning_rate: float = 0.1
    epochs: int = 300
    l2_penalty: float = 1e-4
    jobs: int = 1
    output_path: str = ""

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; expected one of {', '.join(METHODS)}")
        for m in self.models:
            if m not in MODELS:
                raise ConfigError(f"unknown model {m!r}; expected one of {', '.join(MODELS)}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        for r in self.r_grid:
            if not (0.0 < r <= 1.0):
                raise ConfigError(f"r_grid values must lie in (0, 1], got {r}")
        if self.task in ("sweep", "compare") and not self.r_grid:
            raise ConfigError("r_grid must be non-empty")
        if self.task == "compare" and len(self.methods) < 2:
            raise ConfigError("compare needs at least two methods")
        if int(self.cv_folds) < 2:
            raise ConfigError(f"cv_folds must be at least 2, got {self.cv_folds}")
        if not (0.0 < self.theta < 1.0):
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")

    def logistic(self) -> LogisticConfig:
        return LogisticConfig(self.learning_rate, int(self.epochs), self.l2_penalty)


# -- config file ---------------------------------------------------------------

_LIST_KEYS = {"r_grid": float, "seeds": int, "methods": str, "models": str}
_SCALAR_KEYS = {
    "task": str, "n_total": int, "dim": int, "separation": float, "cv_folds": int,
    "theta": float, "smote_k": int, "learning_rate": float, "epochs": int,
    "l2_penalty": float, "jobs": int, "output_path": str, "vote": str, "ensemble_score": str,
}
CONFIG_KEYS = tuple(sorted({*_LIST_KEYS, *_SCALAR_KEYS}))


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; lists are comma-separated."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_config(values: dict, task: str | None = None) -> ExperimentConfig:
    """ExperimentConfig from string-valued settings (file entries, then flags)."""
    kwargs = {}
    values = dict(values)
    if task is not None:
        values["task"] = task
    score = values.pop("ensemble_score", "soft")
    vote_text = values.pop("vote", "hard:adaptive")
    for key, raw in values.items():
        if raw is None:
            continue
        try:
            if key in _LIST_KEYS:
                conv = _LIST_KEYS[key]
                items = raw if isinstance(raw, (list, tuple)) else [
                    s.strip() for s in str(raw).split(",") if s.strip()
                ]
                kwargs[key] = tuple(conv(s) for s in items)
            elif key in _SCALAR_KEYS:
                kwargs[key] = _SCALAR_KEYS[key](raw)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError:
            raise ConfigError(f"config key {key!r}: cannot parse {raw!r}") from None
    kwargs["vote"] = VoteSpec.parse(vote_text, score=score)
    return ExperimentConfig(**kwargs)


# -- one fold ------------------------------------------------------------------

@dataclass
class FoldOutcome:
    report: MetricsReport | None
    status: str
    training_rows: np.ndarray  # dataset rows that shaped the training set


def _fit_and_score(dataset: Dataset, train: np.ndarray, valid: np.ndarray, method: str,
                   model: str, seed: int, fold: int, logistic: LogisticConfig,
                   vote: VoteSpec, theta: float, smote_k: int) -> FoldOutcome:
    train_ds = dataset.take(train)
    valid_ds = dataset.take(valid)
    model_seed = derive_seed(seed, _MODEL, fold)
    cfg = dataclasses.replace(logistic, seed=model_seed)
    if method in ("ensemble1", "ensemble2"):
        if model != "logreg":
            raise ConfigError(f"{method} needs logistic base models, not {model}")
        mode = WITHOUT_REPLACEMENT if method == "ensemble1" else WITH_REPLACEMENT
        plan = plan_balanced_subsets(train_ds, mode, theta, derive_seed(seed, _PLAN, fold))
        ens = train_ensemble(train_ds, plan, cfg, vote)
        if vote.family == "hard" and requires_unanimity(ens.k, ens.threshold()):
            log.debug("fold %d: K=%d with vote threshold %.4g requires unanimity",
                      fold, ens.k, ens.threshold())
        out = ens.outputs(valid_ds.features)
        used = np.unique(np.concatenate([plan.minority, *plan.subsets]))
        report = evaluate(valid_ds.labels, out["final_label"], out["score"])
        return FoldOutcome(report, "ok", train[used])
    resampled = balance(train_ds, method, derive_seed(seed, _BALANCE, fold), smote_k)
    used = np.unique(np.concatenate([resampled.origin, resampled.partner[resampled.partner >= 0]]))
    if model == "logreg":
        clf = LogisticRegression(cfg).fit(resampled.dataset)
        scores = clf.predict_proba(valid_ds.features)
        labels = clf.predict(valid_ds.features)
    else:
        strategy = DummyStrategy(model.split("_", 1)[1], model_seed)
        scores, labels = dummy_predict(strategy, class_counts(resampled.dataset), len(valid_ds))
    report = evaluate(valid_ds.labels, labels, scores)
    return FoldOutcome(report, "ok", train[used])


def cross_validate_folds(dataset: Dataset, method: str, model: str, k: int, seed: int,
                         logistic: LogisticConfig | None = None, vote: VoteSpec | None = None,
                         theta: float = DEFAULT_THETA, smote_k: int = 5,
                         strict: bool = True) -> list[FoldOutcome]:
    """Per-fold outcomes.  With ``strict=False`` a failing fold is reported in
    ``status`` instead of raising."""
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}")
    logistic = logistic if logistic is not None else LogisticConfig()
    vote = vote if vote is not None else VoteSpec()
    folds = stratified_kfold(dataset, k, derive_seed(seed, _FOLDS))
    outcomes = []
    for f in range(int(k)):
        valid = np.flatnonzero(folds == f)
        train = np.flatnonzero(folds != f)
        try:
            outcomes.append(_fit_and_score(dataset, train, valid, method, model, seed, f,
                                           logistic, vote, theta, smote_k))
        except RatioLawError as exc:
            if strict:
                raise
            log.warning("%s/%s seed=%d fold=%d: %s", method, model, seed, f, exc)
            outcomes.append(FoldOutcome(None, f"error: {exc}", np.empty(0, dtype=np.intp)))
    return outcomes


def cross_validate(dataset: Dataset, method: str, model: str, k: int = 10, seed: int = 0,
                   **kwargs) -> list[MetricsReport]:
    """k per-fold metric reports for ``method`` x ``model`` on ``dataset``."""
    return [o.report for o in cross_validate_folds(dataset, method, model, k, seed, **kwargs)]


# -- result rows ---------------------------------------------------------------

RESULT_HEADER = ("task", "method", "model", "r", "seed", "fold", *METRIC_COLUMNS, "status")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ResultRow:
    task: str
    method: str
    model: str
    r: float
    seed: int
    fold: int
    report: MetricsReport | None
    status: str = "ok"

    def sort_key(self):
        return (self.model, self.method, self.r, self.seed, self.fold)

    def metric(self, name: str) -> float:
        return getattr(self.report, name) if self.report is not None else math.nan

    def cells(self) -> list[str]:
        metrics = [self.metric(name) for name in METRIC_COLUMNS]
        return [self.task, self.method, self.model, _fmt(float(self.r)), str(self.seed),
                str(self.fold), *(_fmt(float(v)) for v in metrics), self.status]


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _work_item(args) -> list[ResultRow]:
    config, r, seed, model, method = args
    try:
        dataset = generate_synthetic(
            GeneratorConfig(config.n_total, config.dim, r, config.separation, seed)
        )
    except RatioLawError as exc:
        log.warning("skipping r=%s seed=%d: %s", r, seed, exc)
        return []
    outcomes = cross_validate_folds(
        dataset, method, model, config.cv_folds, seed, logistic=config.logistic(),
        vote=config.vote, theta=config.theta, smote_k=config.smote_k, strict=False,
    )
    return [ResultRow(config.task, method, model, r, seed, f, o.report, o.status)
            for f, o in enumerate(outcomes)]


def run_grid(config: ExperimentConfig) -> list[ResultRow]:
    items = [(config, r, s, model, method)
             for r in config.r_grid for s in config.seeds
             for model in config.models for method in config.methods]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            chunks = list(pool.map(_work_item, items))
    else:
        chunks = [_work_item(item) for item in items]
    rows = [row for chunk in chunks for row in chunk]
    return sorted(rows, key=ResultRow.sort_key)


def summarize(rows: list[ResultRow]) -> list[list[str]]:
    """Mean and sample SD over seeds x folds per (model, method, r, metric)."""
    groups: dict = {}
    for row in rows:
        if row.report is None:
            continue
        groups.setdefault((row.model, row.method, row.r), []).append(row.report)
    out = []
    for (model, method, r), reports in sorted(groups.items()):
        for name in METRIC_COLUMNS:
            vals = np.array([getattr(rep, name) for rep in reports])
            sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            out.append([model, method, _fmt(float(r)), name, str(vals.size),
                        _fmt(float(vals.mean())), _fmt(sd)])
    return out


SUMMARY_HEADER = ("model", "method", "r", "metric", "n", "mean", "sd")


def run_ratio_sweep(config: ExperimentConfig) -> list[ResultRow]:
    if config.task != "sweep":
        raise ConfigError(f"run_ratio_sweep needs task=sweep, got {config.task!r}")
    return run_grid(config)


TTEST_HEADER = ("comparison", "model", "r", "metric", "method_1", "method_2",
                "statistic", "p_value", "df", "mean_1", "mean_2", "n_pairs", "note")


def per_seed_means(rows, model, method, r, metric) -> dict:
    """CV-mean of ``metric`` for each seed, skipping seeds with failed folds."""
    by_seed: dict = {}
    for row in rows:
        if (row.model, row.method, row.r) == (model, method, r):
            by_seed.setdefault(row.seed, []).append(row.metric(metric))
    return {s: float(np.mean(v)) for s, v in by_seed.items() if not np.any(np.isnan(v))}


def paired_comparisons(rows: list[ResultRow], methods, models, r_grid) -> list[list[str]]:
    """Paired t-tests on per-seed CV means for every method pair."""
    out = []
    for model, r, metric in itertools.product(models, r_grid, COMPARE_METRICS):
        for m1, m2 in itertools.combinations(methods, 2):
            a = per_seed_means(rows, model, m1, r, metric)
            b = per_seed_means(rows, model, m2, r, metric)
            common = sorted(set(a) & set(b))
            xa = [a[s] for s in common]
            xb = [b[s] for s in common]
            stat = p = df = math.nan
            note = "ok"
            try:
                res = paired_ttest(xa, xb)
                stat, p, df = res.statistic, res.p_value, res.degrees_of_freedom
            except RatioLawError as exc:
                note = f"error: {exc}"
            mean_1 = float(np.mean(xa)) if xa else math.nan
            mean_2 = float(np.mean(xb)) if xb else math.nan
            out.append([f"{m1} vs {m2}", model, _fmt(float(r)), metric, m1, m2, _fmt(float(stat)),
                        _fmt(float(p)), _fmt(float(df)), _fmt(mean_1), _fmt(mean_2),
                        str(len(common)), note])
    return out


def run_balancing_comparison(config: ExperimentConfig):
    """Result rows plus the paired t-test table."""
    if config.task != "compare":
        raise ConfigError(f"run_balancing_comparison needs task=compare, got {config.task!r}")
    rows = run_grid(config)
    return rows, paired_comparisons(rows, config.methods, config.models, config.r_grid)


CURVE_HEADER = ("r", "f1_random", "auprc_random", "f1_deriv", "auprc_deriv")


def tabulate_curves(r_grid) -> list[list[str]]:
    rows = []
    for r in r_grid:
        r = float(r)
        rows.append([_fmt(r), _fmt(f1_random(r)), _fmt(auprc_random(r)),
                     _fmt(f1_random_derivative(r)), _fmt(auprc_random_derivative(r))])
    return rows


def vote_threshold_study(config: ExperimentConfig, votes, method: str = "ensemble1",
                         metric: str = "f1") -> dict:
    """Mean ``metric`` over seeds x folds for each vote spec in ``votes``.

    Every spec reruns the same folds and plans, so only the vote rule varies.
    """
    means = {}
    for text in votes:
        vote = VoteSpec.parse(text, score=config.vote.score)
        cfg = dataclasses.replace(config, task="sweep", methods=(method,), models=("logreg",),
                                  vote=vote)
        rows = run_grid(cfg)
        vals = [row.metric(metric) for row in rows if row.report is not None]
        means[text] = float(np.mean(vals)) if vals else math.nan
    return means


def adaptive_vote_check(config: ExperimentConfig, fixed: float = 0.9) -> dict:
    """Compare adaptive hard voting with a fixed threshold; log, never raise.

    The adaptive rule is expected to match or beat the fixed one on mean F1.
    A shortfall is reported as a warning.
    """
    fixed_spec = f"hard:{fixed}"
    means = vote_threshold_study(config, ("hard:adaptive", fixed_spec))
    if means["hard:adaptive"] < means[fixed_spec]:
        log.warning("adaptive vote F1 %.4f fell below fixed-%s F1 %.4f",
                    means["hard:adaptive"], fixed, means[fixed_spec])
    return means
