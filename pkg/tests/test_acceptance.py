"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]`` or ``[FAIL]`` line through the
``verdict`` fixture; the lines are repeated in the pytest terminal summary.
"""

import itertools
import math
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from ratiolaw.balancing import (
    WITH_REPLACEMENT,
    WITHOUT_REPLACEMENT,
    SmoteConfig,
    num_base_classifiers,
    plan_balanced_subsets,
    smote_with_provenance,
)
from ratiolaw.classifiers import DummyStrategy, dummy_predict
from ratiolaw.data import ClassCounts, Dataset, GeneratorConfig, class_counts, generate_synthetic
from ratiolaw.experiments import ExperimentConfig, run_grid, vote_threshold_study
from ratiolaw.metrics import auprc, auroc, evaluate
from ratiolaw.ratio_law import (
    auprc_random,
    auprc_random_derivative,
    external_task_points,
    f1_random,
    f1_random_derivative,
    fit_ratio_law,
)

R_GRID = (0.05, 0.1, 0.25, 0.5, 1.0)
MC_N = 200_000

# Exact rational product-moment correlation of the external-task fixture,
# evaluated with fractions.Fraction and a 40-digit decimal square root.
HAND_PEARSON = {"f1": 0.95427618962156275, "auprc": 0.93384469250608471}


def _dummy_run(kind: str, r: float, seed: int):
    ds = generate_synthetic(GeneratorConfig(MC_N, dim=1, ratio=r, seed=seed))
    scores, labels = dummy_predict(DummyStrategy(kind, seed + 1), class_counts(ds), ds.n_samples)
    return evaluate(ds.labels, labels, scores)


def test_criterion_01_analytic_endpoints(verdict):
    f1_one, ap_one = f1_random(1.0), auprc_random(1.0)
    f1_tiny, ap_tiny = f1_random(1e-9), auprc_random(1e-9)
    ok = (abs(f1_one - 0.5) <= 1e-12 and abs(ap_one - 0.5) <= 1e-12
          and f1_tiny < 1e-8 and ap_tiny < 1e-8)
    verdict(1, "analytic endpoints", ok,
            f"f1(1)={f1_one!r} auprc(1)={ap_one!r} f1(1e-9)={f1_tiny:.3g} auprc(1e-9)={ap_tiny:.3g}")


def test_criterion_02_uniform_dummy_law(verdict):
    start = time.perf_counter()
    worst_f1 = worst_ap = 0.0
    for i, r in enumerate(R_GRID):
        rep = _dummy_run("uniform", r, seed=100 + i)
        worst_f1 = max(worst_f1, abs(rep.f1 - f1_random(r)))
        worst_ap = max(worst_ap, abs(rep.auprc - auprc_random(r)))
    elapsed = time.perf_counter() - start
    ok = worst_f1 <= 0.01 and worst_ap <= 0.01 and elapsed < 30
    verdict(2, "uniform dummy reproduces 2r/(3r+1) and r/(1+r)", ok,
            f"max |dF1|={worst_f1:.4f} max |dAUPRC|={worst_ap:.4f} tol 0.01, {elapsed:.1f}s")


def test_criterion_03_stratified_dummy(verdict):
    worst = 0.0
    for i, r in enumerate(R_GRID):
        rep = _dummy_run("stratified", r, seed=200 + i)
        target = r / (1 + r)
        worst = max(worst, abs(rep.precision - target), abs(rep.recall - target),
                    abs(rep.f1 - target))
    verdict(3, "stratified dummy precision/recall/F1 -> r/(1+r)", worst <= 0.01,
            f"max deviation {worst:.4f} tol 0.01")


ALPHABET = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
TYPES = tuple((s, y) for s in ALPHABET for y in (0, 1))


def _pairwise_auroc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    twice = sum(2 if p > q else (1 if p == q else 0) for p in pos for q in neg)
    return twice / (2 * len(pos) * len(neg))


def _threshold_auprc(scores, labels):
    n_pos = sum(labels)
    terms, prev_tp = [], 0
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if y == 1 and s >= t)
        pp = sum(1 for s in scores if s >= t)
        if tp > prev_tp:
            terms.append(((tp - prev_tp) / n_pos) * (tp / pp))
        prev_tp = tp
    return math.fsum(terms)


def test_criterion_04_metric_oracle_exhaustive(verdict):
    # Metrics are permutation invariant, so multisets of (score, label)
    # cover every configuration.
    start = time.perf_counter()
    checked = mismatches = 0
    for n in range(2, 9):
        for combo in itertools.combinations_with_replacement(range(len(TYPES)), n):
            labels = [TYPES[i][1] for i in combo]
            n_pos = sum(labels)
            if n_pos == 0 or n_pos == n:
                continue
            scores = [TYPES[i][0] for i in combo]
            checked += 1
            if (auroc(scores, labels) != _pairwise_auroc(scores, labels)
                    or auprc(scores, labels) != _threshold_auprc(scores, labels)):
                mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    verdict(4, "auroc/auprc equal brute force on every n<=8 configuration", ok,
            f"{checked} configurations, {mismatches} mismatches, {elapsed:.1f}s")


def _fd(fn, r, h=1e-5):
    if r + h <= 1.0:
        return (fn(r + h) - fn(r - h)) / (2 * h)
    # second-order backward difference at the domain edge
    return (3 * fn(r) - 4 * fn(r - h) + fn(r - 2 * h)) / (2 * h)


def test_criterion_05_derivatives(verdict):
    worst = 0.0
    for i in range(1, 21):
        r = round(0.05 * i, 2)
        for fn, deriv in ((f1_random, f1_random_derivative), (auprc_random, auprc_random_derivative)):
            exact = deriv(r)
            worst = max(worst, abs(_fd(fn, r) - exact) / exact)
    verdict(5, "finite differences match 2/(3r+1)^2 and 1/(1+r)^2", worst <= 1e-6,
            f"max relative error {worst:.2e} tol 1e-6")


def test_criterion_06_k_formulas(verdict):
    k_wo = num_base_classifiers(ClassCounts(900, 100), WITHOUT_REPLACEMENT)
    k_w = num_base_classifiers(ClassCounts(1000, 100), WITH_REPLACEMENT, 0.05)
    theta, n0, n1, plans = 0.05, 200, 50, 1000
    ds = Dataset(np.zeros((n0 + n1, 1)), np.r_[np.zeros(n0), np.ones(n1)])
    missed = np.zeros(n0)
    k_mc = None
    for seed in range(plans):
        plan = plan_balanced_subsets(ds, WITH_REPLACEMENT, theta, seed)
        k_mc = plan.k
        covered = np.zeros(n0, dtype=bool)
        for subset in plan.subsets:
            covered[subset] = True
        missed += ~covered
    freq = missed / plans
    ok = k_wo == 9 and k_w == 29 and freq.max() < theta + 0.03
    verdict(6, "K formulas and with-replacement coverage", ok,
            f"K_wo={k_wo} K_w={k_w}; K={k_mc} at 200/50, omission mean {freq.mean():.4f} "
            f"max {freq.max():.4f} over {plans} plans, bound {theta + 0.03:.2f}")


def test_criterion_07_smote_geometry(verdict):
    worst, balanced, rows = 0.0, True, 0
    for seed in range(5):
        ds = generate_synthetic(GeneratorConfig(3000, dim=6, ratio=0.1 + 0.1 * seed, seed=seed))
        out, prov = smote_with_provenance(ds, SmoteConfig(5, seed))
        xi = ds.features[prov.parent_i]
        xk = ds.features[prov.parent_k]
        s = out.features[ds.n_samples:]
        resid = np.linalg.norm((s - xi) - prov.lam[:, None] * (xk - xi), axis=1)
        scale = np.maximum(np.linalg.norm(xk - xi, axis=1), np.finfo(float).tiny)
        worst = max(worst, float((resid / scale).max()))
        c = class_counts(out)
        balanced &= c.n_minority == c.n_majority
        rows += s.shape[0]
    ok = worst < 1e-9 and balanced
    verdict(7, "SMOTE rows lie on parent segments; classes equal", ok,
            f"{rows} synthetic rows, max relative residual {worst:.2e}, balanced={balanced}")


def test_criterion_08_external_task_correlation(verdict):
    details, ok = [], True
    for metric in ("f1", "auprc"):
        fit = fit_ratio_law(external_task_points(metric))
        hand = HAND_PEARSON[metric]
        agree = abs(fit.pearson_r - hand) <= 1e-12
        ok &= agree and fit.pearson_r > 0.9 and hand > 0.9
        details.append(f"{metric} R={fit.pearson_r:.6f} (hand {hand:.6f})")
    verdict(8, "external-task Pearson R > 0.9", ok, ", ".join(details))


def _comparison_config(**kw):
    base = dict(task="compare", r_grid=(0.1,), n_total=5000, separation=1.0, seeds=(0, 1, 2, 3, 4),
                cv_folds=10, methods=("unbalanced", "ensemble1", "ensemble2"), models=("logreg",))
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def comparison_rows():
    start = time.perf_counter()
    rows = run_grid(_comparison_config())
    return rows, time.perf_counter() - start


def _mean(rows, method, metric):
    return float(np.mean([r.metric(metric) for r in rows if r.method == method]))


def test_criterion_09_ensemble_vs_unbalanced(verdict, comparison_rows):
    rows, elapsed = comparison_rows
    assert all(r.status == "ok" for r in rows)
    ap_e1, ap_ub = _mean(rows, "ensemble1", "auprc"), _mean(rows, "unbalanced", "auprc")
    f1_e1, f1_ub = _mean(rows, "ensemble1", "f1"), _mean(rows, "unbalanced", "f1")
    ap_e2, f1_e2 = _mean(rows, "ensemble2", "auprc"), _mean(rows, "ensemble2", "f1")
    ok = ap_e1 >= ap_ub and f1_e1 >= f1_ub and elapsed < 300
    verdict(9, "Ensemble-1 AUPRC and F1 >= unbalanced", ok,
            f"AUPRC {ap_e1:.5f} vs {ap_ub:.5f}, F1 {f1_e1:.5f} vs {f1_ub:.5f}; "
            f"Ensemble-2 AUPRC {ap_e2:.5f} F1 {f1_e2:.5f} (no ordering asserted); {elapsed:.0f}s")


def test_criterion_10_vote_threshold_trend(verdict):
    means = vote_threshold_study(_comparison_config(), ("hard:0.9", "hard:0.1"))
    ok = means["hard:0.9"] > means["hard:0.1"]
    verdict(10, "hard-vote F1 at q=0.9 exceeds q=0.1", ok,
            f"F1 q=0.9 {means['hard:0.9']:.4f}, q=0.1 {means['hard:0.1']:.4f}")


CLI_RUNS = [
    ["gen", "--n-total", "400", "--dim", "3", "--ratio", "0.2", "--seed", "7", "--output", "{d}/data.csv"],
    ["balance", "--input", "{d}/data.csv", "--method", "smote", "--seed", "3",
     "--provenance", "{d}/prov.csv", "--output", "{d}/smote.csv"],
    ["balance", "--input", "{d}/data.csv", "--method", "undersample", "--output", "{d}/under.csv"],
    ["balance", "--input", "{d}/data.csv", "--method", "oversample", "--output", "{d}/over.csv"],
    ["train", "--input", "{d}/data.csv", "--output", "{d}/model.txt"],
    ["eval", "--model", "{d}/model.txt", "--data", "{d}/data.csv", "--output", "{d}/eval.csv"],
    ["ensemble", "--input", "{d}/data.csv", "--mode", "ensemble2", "--vote", "soft:mean",
     "--plan-output", "{d}/plan.csv", "--output", "{d}/pred.csv"],
    ["sweep", "--config", "{d}/run.conf", "--output", "{d}/sweep.csv"],
    ["sweep", "--config", "{d}/run.conf", "--jobs", "2", "--output", "{d}/sweep_parallel.csv"],
    ["compare", "--config", "{d}/run.conf", "--methods", "unbalanced,smote,ensemble1",
     "--output", "{d}/compare.csv"],
    ["curves", "--config", "{d}/run.conf", "--output", "{d}/curves.csv"],
    ["fit-law", "--builtin", "external-tasks", "--output", "{d}/fit.csv"],
    ["ttest", "--input", "{d}/cols.csv", "--a", "a", "--b", "b", "--output", "{d}/ttest.csv"],
]


def _run_all(d):
    (d / "run.conf").write_text(
        "r_grid = 0.2, 0.5\nn_total = 300\ndim = 3\nseeds = 0, 1\ncv_folds = 3\nepochs = 60\n"
        "methods = unbalanced, oversample\nmodels = logreg, dummy_stratified\n"
    )
    (d / "cols.csv").write_text("a,b\n0.61,0.58\n0.64,0.60\n0.59,0.57\n0.66,0.61\n")
    for argv in CLI_RUNS:
        args = [a.format(d=d) for a in argv]
        subprocess.run([sys.executable, "-m", "ratiolaw", *args], check=True, capture_output=True)
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_criterion_11_cli_determinism(verdict, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    first.mkdir()
    second.mkdir()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a, b = _run_all(first), _run_all(second)
    differing = sorted(name for name in a if a[name] != b.get(name))
    same_parallel = a["sweep.csv"] == a["sweep_parallel.csv"]
    ok = not differing and set(a) == set(b) and same_parallel
    verdict(11, "CLI reruns are byte-identical", ok,
            f"{len(a)} files compared, differing: {differing or 'none'}, "
            f"parallel sweep identical: {same_parallel}")

