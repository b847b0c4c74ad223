import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratiolaw.classifiers import LogisticConfig, fit_logistic
from ratiolaw.data import (
    ClassCounts,
    Dataset,
    GeneratorConfig,
    class_counts,
    generate_synthetic,
    imbalance_ratio,
    load_csv,
    minority_size,
    save_csv,
    stratified_kfold,
)
from ratiolaw.errors import ConfigError, DataError
from ratiolaw.metrics import auroc


def _ds(labels, p=2):
    labels = np.asarray(labels)
    x = np.arange(labels.size * p, dtype=float).reshape(labels.size, p)
    return Dataset(x, labels)


@pytest.mark.parametrize(
    "labels, expected",
    [([1, 0, 0, 0], (3, 1)), ([1, 1, 0, 0], (2, 2)), ([0, 0, 0], (3, 0))],
)
def test_class_counts(labels, expected):
    assert class_counts(_ds(labels)) == ClassCounts(*expected)


def test_imbalance_ratio_examples():
    assert imbalance_ratio(ClassCounts(900, 100)) == pytest.approx(1 / 9)
    assert imbalance_ratio(ClassCounts(500, 500)) == 1.0
    with pytest.raises(DataError, match="degenerate class distribution"):
        imbalance_ratio(ClassCounts(10, 0))
    with pytest.raises(DataError, match="minority label convention violated"):
        imbalance_ratio(ClassCounts(3, 5))


def test_dataset_is_immutable_and_validated():
    ds = _ds([0, 1, 0])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5.0
    with pytest.raises(DataError, match="label outside"):
        Dataset(np.zeros((2, 1)), [0, 2])
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), [0, 1, 1])
    with pytest.raises(DataError):
        Dataset(np.array([[np.nan], [0.0]]), [0, 1])


def test_generate_synthetic_counts():
    for n, r, n1 in [(1000, 0.25, 200), (1000, 1.0, 500)]:
        c = class_counts(generate_synthetic(GeneratorConfig(n, dim=3, ratio=r, seed=1)))
        assert (c.n_minority, c.n_majority) == (n1, n - n1)


def test_generate_synthetic_unrealizable():
    with pytest.raises(DataError, match="ratio unrealizable at this n"):
        generate_synthetic(GeneratorConfig(10, dim=2, ratio=0.01))


def test_generator_config_validation():
    with pytest.raises(ConfigError):
        GeneratorConfig(100, ratio=1.5)
    with pytest.raises(ConfigError):
        GeneratorConfig(0)
    with pytest.raises(ConfigError):
        GeneratorConfig(10, separation=-1.0)


def test_generate_synthetic_is_pure():
    cfg = GeneratorConfig(500, dim=4, ratio=0.3, separation=1.5, seed=42)
    assert generate_synthetic(cfg).equals(generate_synthetic(cfg))
    other = generate_synthetic(GeneratorConfig(500, dim=4, ratio=0.3, separation=1.5, seed=43))
    assert not generate_synthetic(cfg).equals(other)


def test_generate_synthetic_separation_shifts_first_axis():
    ds = generate_synthetic(GeneratorConfig(20000, dim=3, ratio=1.0, separation=2.0, seed=0))
    pos = ds.features[ds.labels == 1]
    neg = ds.features[ds.labels == 0]
    assert pos[:, 0].mean() - neg[:, 0].mean() == pytest.approx(2.0, abs=0.05)
    assert abs(pos[:, 1].mean() - neg[:, 1].mean()) < 0.05


def test_zero_separation_gives_chance_auroc():
    ds = generate_synthetic(GeneratorConfig(40000, dim=2, ratio=1.0, separation=0.0, seed=3))
    train, test = ds.take(np.arange(20000)), ds.take(np.arange(20000, 40000))
    model = fit_logistic(train, LogisticConfig(epochs=50))
    assert auroc(model.predict_proba(test.features), test.labels) == pytest.approx(0.5, abs=0.02)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 3000), r=st.floats(0.001, 1.0))
def test_generator_realizes_rounded_ratio(n, r):
    n1 = minority_size(n, r)
    cfg = GeneratorConfig(n, dim=1, ratio=r, seed=0)
    if n1 == 0 or n1 == n:
        with pytest.raises(DataError):
            generate_synthetic(cfg)
        return
    c = class_counts(generate_synthetic(cfg))
    assert c.n_minority == round(n * r / (1 + r))
    assert c.total == n


def test_stratified_kfold_exact_split():
    ds = _ds([1] * 10 + [0] * 90)
    folds = stratified_kfold(ds, 10, seed=5)
    for f in range(10):
        in_fold = ds.labels[folds == f]
        assert (in_fold.sum(), in_fold.size - in_fold.sum()) == (1, 9)


def test_stratified_kfold_two_folds():
    folds = stratified_kfold(_ds([1, 1, 0, 0]), 2, seed=0)
    labels = np.array([1, 1, 0, 0])
    for f in range(2):
        assert sorted(labels[folds == f]) == [0, 1]


def test_stratified_kfold_insufficient():
    with pytest.raises(DataError, match="insufficient samples for stratified folds"):
        stratified_kfold(_ds([1] * 5 + [0] * 50), 10, seed=0)
    with pytest.raises(ConfigError):
        stratified_kfold(_ds([1, 0, 1, 0]), 1, seed=0)


@settings(max_examples=60, deadline=None)
@given(n1=st.integers(2, 60), n0=st.integers(2, 200), k=st.integers(2, 10), seed=st.integers(0, 2**32))
def test_stratified_kfold_properties(n1, n0, k, seed):
    if n1 < k or n0 < k:
        return
    labels = np.array([1] * n1 + [0] * n0)
    ds = _ds(labels, p=1)
    folds = stratified_kfold(ds, k, seed)
    assert set(np.unique(folds)) == set(range(k))
    sizes = np.bincount(folds, minlength=k)
    assert sizes.max() - sizes.min() <= 1
    share = n1 / (n1 + n0)
    for f in range(k):
        frac = labels[folds == f].mean()
        assert abs(frac - share) < 1.0 / sizes[f]


def test_csv_round_trip(tmp_path):
    ds = Dataset(np.array([[0.1, -2.5], [1e-300, 3.0], [np.pi, 7.0]]), [1, 0, 0])
    path = tmp_path / "d.csv"
    save_csv(ds, path)
    assert path.read_text().splitlines()[0] == "x0,x1,label"
    assert load_csv(path).equals(ds)


@pytest.mark.parametrize(
    "text, pattern",
    [
        ("x0,x1\n1,2\n", "missing `label` column"),
        ("x0,label\n1,2\n", r"label outside \{0,1\}"),
        ("x0,x1,label\n1,2,0\n3,abc,1\n", r"'abc' at row 3, column 'x1'"),
        ("", "empty file"),
    ],
)
def test_csv_errors(tmp_path, text, pattern):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DataError, match=pattern):
        load_csv(path)
