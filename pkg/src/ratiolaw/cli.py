"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric failure.
Warnings go to standard error; every result is CSV.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .balancing import (
    WITH_REPLACEMENT,
    WITHOUT_REPLACEMENT,
    SmoteConfig,
    oversample,
    plan_balanced_subsets,
    smote_with_provenance,
    undersample,
)
from .classifiers import LogisticConfig, LogisticRegression, fit_logistic, predict_labels
from .data import GeneratorConfig, generate_synthetic, load_csv, save_csv
from .ensemble import VoteSpec, requires_unanimity, train_ensemble, write_predictions
from .errors import ConfigError, DataError, RatioLawError
from .metrics import METRIC_COLUMNS, evaluate
from .ratio_law import external_task_points, fit_ratio_law, fit_with_intercept
from .stats import paired_ttest, pooled_ttest, welch_ttest

log = logging.getLogger("ratiolaw")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


@contextlib.contextmanager
def _output(path):
    if path in (None, "", "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _emit(path, header, rows):
    with _output(path) as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _logistic_args(p):
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--l2-penalty", type=float, default=1e-4)


def _logistic_config(args) -> LogisticConfig:
    return LogisticConfig(args.learning_rate, args.epochs, args.l2_penalty, args.seed)


# -- subcommands ---------------------------------------------------------------

def cmd_gen(args):
    ds = generate_synthetic(
        GeneratorConfig(args.n_total, args.dim, args.ratio, args.separation, args.seed)
    )
    with _output(args.output) as fh:
        save_csv(ds, fh)


def cmd_balance(args):
    ds = load_csv(args.input)
    if args.method == "undersample":
        out = undersample(ds, args.seed)
    elif args.method == "oversample":
        out = oversample(ds, args.seed)
    else:
        out, prov = smote_with_provenance(ds, SmoteConfig(args.smote_k, args.seed))
        if args.provenance:
            prov.to_csv(args.provenance)
    with _output(args.output) as fh:
        save_csv(out, fh)


def cmd_train(args):
    model = fit_logistic(load_csv(args.input), _logistic_config(args))
    with _output(args.output) as fh:
        fh.write(model.to_text())


def _mode(text: str) -> str:
    return {"ensemble1": WITHOUT_REPLACEMENT, "ensemble2": WITH_REPLACEMENT}.get(text, text)


def cmd_ensemble(args):
    train = load_csv(args.input)
    evaluate_on = load_csv(args.eval) if args.eval else train
    vote = VoteSpec.parse(args.vote, score=args.ensemble_score)
    mode = _mode(args.mode)
    plan = plan_balanced_subsets(train, mode, args.theta, args.seed)
    if args.plan_output:
        plan.to_csv(args.plan_output)
    ens = train_ensemble(train, plan, _logistic_config(args), vote)
    if vote.family == "hard" and requires_unanimity(ens.k, ens.threshold()):
        log.warning("K=%d base models with vote threshold %.6g: a positive call needs "
                    "every base model to agree", ens.k, ens.threshold())
    with _output(args.output) as fh:
        write_predictions(fh, ens.outputs(evaluate_on.features))


def _read_columns(path) -> dict:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        cols = {name.strip(): [] for name in reader.fieldnames}
        for lineno, rec in enumerate(reader, start=2):
            for name, value in rec.items():
                cols[name.strip()].append((lineno, value))
    return cols


def _numeric(cols, name, path):
    if name not in cols:
        raise DataError(f"{path}: missing `{name}` column")
    out = []
    for lineno, value in cols[name]:
        try:
            out.append(float(value))
        except (TypeError, ValueError):
            raise DataError(f"{path}: non-numeric `{name}` value {value!r} at row {lineno}") from None
    return np.array(out)


def cmd_eval(args):
    if args.model:
        if not args.data:
            raise ConfigError("--model needs --data")
        ds = load_csv(args.data)
        model = LogisticRegression.from_text(Path(args.model).read_text(encoding="utf-8"))
        scores = model.predict_proba(ds.features)
        labels, preds = ds.labels, model.predict(ds.features, args.threshold)
    elif args.scores:
        cols = _read_columns(args.scores)
        labels = _numeric(cols, "label", args.scores)
        scores = _numeric(cols, "score", args.scores)
        if "pred" in cols:
            preds = _numeric(cols, "pred", args.scores)
        else:
            preds = predict_labels(np.clip(scores, 0.0, 1.0), args.threshold)
    else:
        raise ConfigError("eval needs --scores or --model/--data")
    report = evaluate(labels, preds, scores)
    _emit(args.output, (*METRIC_COLUMNS, "flags"),
          [[repr(v) for v in report.values()] + [";".join(report.flags)]])


def _experiment_config(args, task) -> ex.ExperimentConfig:
    values = {}
    if args.config:
        values.update(ex.parse_config_text(Path(args.config).read_text(encoding="utf-8")))
    for key in ex.CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return ex.build_config(values, task=task)


def _summary_path(output, suffix):
    if output in (None, "", "-"):
        return None
    p = Path(output)
    return str(p.with_name(p.stem + suffix + p.suffix))


def cmd_sweep(args):
    config = _experiment_config(args, "sweep")
    rows = ex.run_ratio_sweep(config)
    out = config.output_path or args.output
    _emit(out, ex.RESULT_HEADER, [r.cells() for r in rows])
    summary = args.summary or _summary_path(out, "_summary")
    if summary:
        _emit(summary, ex.SUMMARY_HEADER, ex.summarize(rows))


def cmd_compare(args):
    config = _experiment_config(args, "compare")
    rows, tests = ex.run_balancing_comparison(config)
    out = config.output_path or args.output
    _emit(out, ex.RESULT_HEADER, [r.cells() for r in rows])
    ttest_out = args.ttest_output or _summary_path(out, "_ttest")
    if ttest_out:
        _emit(ttest_out, ex.TTEST_HEADER, tests)
    elif ttest_out is None:
        sys.stdout.write("\n")
        _emit(None, ex.TTEST_HEADER, tests)
    summary = args.summary or _summary_path(out, "_summary")
    if summary:
        _emit(summary, ex.SUMMARY_HEADER, ex.summarize(rows))
    flagged = [r for r in rows if r.status != "ok"]
    if flagged:
        log.warning("%d fold rows flagged; see the status column", len(flagged))


def cmd_curves(args):
    if args.r_grid is not None:
        grid = [float(s) for s in args.r_grid.split(",") if s.strip()]
    elif args.config:
        values = ex.parse_config_text(Path(args.config).read_text(encoding="utf-8"))
        grid = [float(s) for s in values.get("r_grid", "").split(",") if s.strip()]
    else:
        grid = [round(0.01 * i, 2) for i in range(1, 101)]
    if not grid:
        raise ConfigError("r grid is empty")
    bad = [r for r in grid if not (0.0 < r <= 1.0)]
    if bad:
        raise ConfigError(f"r grid values must lie in (0, 1], got {bad[0]}")
    _emit(args.output, ex.CURVE_HEADER, ex.tabulate_curves(grid))


def cmd_fit_law(args):
    if args.builtin:
        metrics = ["f1", "auprc"] if args.builtin == "external-tasks" else [args.builtin]
        sets = [(m, external_task_points(m)) for m in metrics]
    elif args.input:
        cols = _read_columns(args.input)
        r = _numeric(cols, "r", args.input)
        y = _numeric(cols, args.metric, args.input)
        sets = [(args.metric, list(zip(r, y)))]
    else:
        raise ConfigError("fit-law needs --input or --builtin")
    rows = []
    for metric, pts in sets:
        fit = fit_ratio_law(pts)
        ols = fit_with_intercept(pts)
        rows.append([metric, "through_origin", repr(fit.coefficient), "0.0",
                     repr(fit.pearson_r), repr(fit.p_value), str(fit.n_points)])
        rows.append([metric, "ols_with_intercept_diagnostic", repr(ols.slope), repr(ols.intercept),
                     repr(fit.pearson_r), repr(fit.p_value), str(ols.n_points)])
    _emit(args.output, ("metric", "fit", "coefficient", "intercept", "pearson_r", "p_value",
                        "n_points"), rows)


def cmd_ttest(args):
    cols = _read_columns(args.input)
    a = _numeric(cols, args.a, args.input)
    b = _numeric(cols, args.b, args.input)
    test = {"paired": paired_ttest, "welch": welch_ttest, "pooled": pooled_ttest}[args.kind]
    res = test(a, b)
    _emit(args.output, ("comparison", "metric", "statistic", "p_value", "df"),
          [[f"{args.a} vs {args.b}", args.metric, repr(res.statistic), repr(res.p_value),
            repr(res.degrees_of_freedom)]])


# -- parser --------------------------------------------------------------------

def _experiment_flags(p):
    p.add_argument("--config", help="flat key = value file; flags override its entries")
    p.add_argument("--r-grid", dest="r_grid")
    p.add_argument("--n-total", dest="n_total")
    p.add_argument("--dim")
    p.add_argument("--separation")
    p.add_argument("--seeds")
    p.add_argument("--cv-folds", dest="cv_folds")
    p.add_argument("--methods")
    p.add_argument("--models")
    p.add_argument("--vote", help="hard:adaptive | hard:<q> | soft:mean | soft:max[:<t>]")
    p.add_argument("--ensemble-score", dest="ensemble_score", choices=["soft", "vote_fraction"])
    p.add_argument("--theta")
    p.add_argument("--smote-k", dest="smote_k")
    p.add_argument("--learning-rate", dest="learning_rate")
    p.add_argument("--epochs")
    p.add_argument("--l2-penalty", dest="l2_penalty")
    p.add_argument("--jobs")
    p.add_argument("--output-path", "--output", dest="output_path")
    p.add_argument("--summary")
    p.set_defaults(output=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ratiolaw", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic two-Gaussian dataset")
    p.add_argument("--n-total", type=int, required=True)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("balance", help="undersample, oversample or SMOTE a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=["undersample", "oversample", "smote"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--provenance", help="SMOTE provenance CSV path")
    p.add_argument("--output")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("train", help="fit a logistic model and write its text block")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, default=0)
    _logistic_args(p)
    p.add_argument("--output")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ensemble", help="train a balanced-subset ensemble and predict")
    p.add_argument("--input", required=True)
    p.add_argument("--eval", help="dataset to predict (default: the training data)")
    p.add_argument("--mode", default=WITHOUT_REPLACEMENT,
                   choices=[WITHOUT_REPLACEMENT, WITH_REPLACEMENT, "ensemble1", "ensemble2"])
    p.add_argument("--theta", type=float, default=0.05)
    p.add_argument("--vote", default="hard:adaptive")
    p.add_argument("--ensemble-score", choices=["soft", "vote_fraction"], default="soft")
    p.add_argument("--seed", type=int, default=0)
    _logistic_args(p)
    p.add_argument("--plan-output")
    p.add_argument("--output")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("eval", help="metrics report from scores or a saved model")
    p.add_argument("--scores", help="CSV with label, score and optional pred columns")
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="cross-validated ratio sweep on synthetic data")
    _experiment_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="cross-validated balancing-method comparison")
    _experiment_flags(p)
    p.add_argument("--ttest-output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("curves", help="tabulate the random-classifier curves")
    p.add_argument("--r-grid")
    p.add_argument("--config")
    p.add_argument("--output")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("fit-law", help="through-origin ratio-law fit")
    p.add_argument("--input", help="CSV with an `r` column and a metric column")
    p.add_argument("--metric", default="f1")
    p.add_argument("--builtin", choices=["external-tasks", "f1", "auprc"])
    p.add_argument("--output")
    p.set_defaults(func=cmd_fit_law)

    p = sub.add_parser("ttest", help="paired, Welch or pooled t-test on two CSV columns")
    p.add_argument("--input", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--kind", choices=["paired", "welch", "pooled"], default="paired")
    p.add_argument("--metric", default="value", help="label for the metric column")
    p.add_argument("--output")
    p.set_defaults(func=cmd_ttest)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        args.func(args)
    except RatioLawError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`)
        sys.stdout = open(os.devnull, "w")
        return 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
