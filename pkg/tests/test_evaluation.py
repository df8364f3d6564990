"""Cross-validation, grid search, sweep, and test-evaluation checks.

The leakage test is the important one: fold training must be a pure
function of the training-fold samples, which we verify by permuting the
held-out labels and comparing trained parameters bit for bit.
"""

import numpy as np
import pytest

from plrlab.errors import ConfigError, ContractViolation
from plrlab.evaluation import (
    DEFAULT_GRIDS,
    SWEEP_HEADER,
    TEST_REPORT_HEADER,
    cross_validate,
    evaluate_on_test,
    fit_fold,
    grid_search,
    kfold_split,
    kfold_split_blocked,
    rmse,
    sweep_intervals,
    sweep_report_to_csv_bytes,
    predictions_to_csv_bytes,
    write_sweep_gnuplot_data,
)
from plrlab.features import Dataset, FeatureVector, Sample, build_dataset
from plrlab.models import predict_batch, train_model
from plrlab.sim import SimConfig, simulate


def make_dataset(X, y, interval=30.0):
    X = np.asarray(X, dtype=np.float64)
    ds = Dataset(interval_s=interval)
    for k, (row, label) in enumerate(zip(X, y)):
        ds.samples.append(
            Sample(
                features=FeatureVector(d=row[0], ipi_s=row[1], rp=row[2], errp=row[3]),
                plr=float(label),
                window_start_s=k * interval,
            )
        )
    return ds


def linearish_dataset(seed, n=60):
    rng = np.random.default_rng(seed)
    X = np.column_stack(
        [
            rng.integers(1, 28, n),
            rng.uniform(0.01, 2.0, n),
            rng.integers(0, 300, n),
            rng.integers(0, 80, n),
        ]
    ).astype(float)
    y = np.clip(0.02 * X[:, 0] + 0.001 * X[:, 3] + rng.normal(0, 0.01, n), 0, 1)
    return make_dataset(X, y)


# ------------------------------------------------------------------ rmse


def test_rmse_hand_values():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([0.0, 0.0], [1.0, 1.0]) == 1.0
    assert rmse([0.0, 1.0], [1.0, 1.0]) == pytest.approx(np.sqrt(0.5))


def test_rmse_contract():
    with pytest.raises(ContractViolation):
        rmse([1.0], [1.0, 2.0])
    with pytest.raises(ContractViolation):
        rmse([], [])


# ----------------------------------------------------------------- folds


@pytest.mark.parametrize("n,k", [(10, 10), (11, 10), (2520, 10), (64, 2)])
def test_kfold_partition_property(n, k):
    folds = kfold_split(n, k, seed=42)
    assert len(folds) == k
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert sum(sizes) == n
    combined = np.sort(np.concatenate(folds))
    assert np.array_equal(combined, np.arange(n))


def test_kfold_exact_sizes():
    assert all(len(f) == 1 for f in kfold_split(10, 10, 0))
    sizes = sorted(len(f) for f in kfold_split(11, 10, 0))
    assert sizes == [1] * 9 + [2]


def test_kfold_deterministic_and_seeded():
    a = kfold_split(100, 10, seed=7)
    b = kfold_split(100, 10, seed=7)
    c = kfold_split(100, 10, seed=8)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert any(not np.array_equal(x, y) for x, y in zip(a, c))


def test_kfold_rejects_bad_k():
    with pytest.raises(ContractViolation):
        kfold_split(5, 6, 0)
    with pytest.raises(ContractViolation):
        kfold_split(5, 1, 0)


def test_kfold_blocked_is_contiguous():
    folds = kfold_split_blocked(25, 4)
    flat = np.concatenate(folds)
    assert np.array_equal(flat, np.arange(25))
    for f in folds:
        assert np.array_equal(f, np.arange(f[0], f[-1] + 1))


# -------------------------------------------------------- cross-validation


def test_cv_constant_labels_near_zero():
    ds = make_dataset(linearish_dataset(1).matrix(), np.full(60, 0.3))
    for kind in ("linear", "tree"):
        report = cross_validate(ds, kind, k=10, seed=0)
        assert report.mean_rmse < 1e-3
    hp = {
        "hidden_layers": 1,
        "units_per_hidden": 2,
        "iterations": 20000,
        "learning_rate": 0.5,
    }
    report = cross_validate(ds, "mlp", hp, k=5, seed=0)
    assert report.mean_rmse < 1e-3


def test_cv_report_aggregates():
    ds = linearish_dataset(2)
    report = cross_validate(ds, "linear", k=10, seed=3)
    assert report.k == 10
    assert len(report.fold_rmses) == 10
    assert report.mean_rmse == pytest.approx(np.mean(report.fold_rmses))
    assert report.std_rmse == pytest.approx(np.std(report.fold_rmses))
    assert report.interval_s == 30.0
    assert not report.blocked


def test_cv_k2_vs_k10_stability():
    ds = linearish_dataset(3, n=120)
    r2 = cross_validate(ds, "linear", k=2, seed=5)
    r10 = cross_validate(ds, "linear", k=10, seed=5)
    assert abs(r2.mean_rmse - r10.mean_rmse) < 0.05


def test_cv_rejects_small_dataset():
    ds = linearish_dataset(4, n=5)
    with pytest.raises(ContractViolation):
        cross_validate(ds, "linear", k=10)


def test_no_leakage_under_heldout_label_permutation():
    ds = linearish_dataset(6)
    folds = kfold_split(len(ds), 10, seed=11)
    held = folds[0]
    train_idx = np.setdiff1d(np.arange(len(ds)), held)

    tampered = Dataset(samples=list(ds.samples), interval_s=ds.interval_s)
    rng = np.random.default_rng(0)
    for i in held:
        s = tampered.samples[i]
        tampered.samples[i] = Sample(
            features=s.features, plr=float(rng.uniform()), window_start_s=s.window_start_s
        )

    for kind, hp in (
        ("linear", None),
        ("tree", {"max_depth": 4}),
        ("mlp", {"hidden_layers": 1, "iterations": 20}),
    ):
        a = fit_fold(ds, train_idx, kind, hp, seed=99)
        b = fit_fold(tampered, train_idx, kind, hp, seed=99)
        probes = linearish_dataset(7).matrix()
        assert np.array_equal(predict_batch(a, probes), predict_batch(b, probes))
        if kind == "linear":
            assert np.array_equal(a.weights, b.weights) and a.bias == b.bias
        if kind == "mlp":
            for Wa, Wb in zip(a.weights, b.weights):
                assert np.array_equal(Wa, Wb)


def test_cv_deterministic():
    ds = linearish_dataset(8)
    hp = {"hidden_layers": 1, "iterations": 50}
    a = cross_validate(ds, "mlp", hp, k=5, seed=13)
    b = cross_validate(ds, "mlp", hp, k=5, seed=13)
    assert a.fold_rmses == b.fold_rmses


# ------------------------------------------------------------ grid search


def test_grid_of_size_one():
    ds = linearish_dataset(9)
    hp, report = grid_search(ds, "linear", [{"ridge_lambda": 1e-4}], k=5, seed=0)
    assert hp == {"ridge_lambda": 1e-4}
    assert report.hyperparams == hp


def test_grid_depth1_underfits_depth8_wins():
    # two nested splits: depth 1 provably cannot represent the target
    rng = np.random.default_rng(10)
    n = 80
    x0 = rng.uniform(0, 1, n)
    x1 = rng.uniform(0, 1, n)
    y = ((x0 > 0.5).astype(float) + (x1 > 0.5)) / 2.0
    X = np.column_stack([x0, x1, np.zeros(n), np.zeros(n)])
    ds = make_dataset(X, y)
    grid = [{"max_depth": 1, "min_samples_leaf": 1}, {"max_depth": 8, "min_samples_leaf": 1}]
    hp, _ = grid_search(ds, "tree", grid, k=5, seed=0)
    assert hp["max_depth"] == 8


def test_grid_tie_returns_first():
    ds = make_dataset(linearish_dataset(11).matrix(), np.full(60, 0.5))
    grid = [{"max_depth": 3}, {"max_depth": 5}]  # both trivially perfect
    hp, _ = grid_search(ds, "tree", grid, k=5, seed=0)
    assert hp == {"max_depth": 3}


def test_grid_search_optimality():
    ds = linearish_dataset(12)
    grid = list(DEFAULT_GRIDS["tree"])[:4]
    best_hp, best_report = grid_search(ds, "tree", grid, k=5, seed=1)
    for gi, hp in enumerate(grid):
        report = cross_validate(ds, "tree", hp, k=5, seed=1, grid_index=gi)
        assert best_report.mean_rmse <= report.mean_rmse + 1e-12


def test_empty_grid_rejected():
    with pytest.raises(ConfigError):
        grid_search(linearish_dataset(13), "linear", [], k=5)


# ----------------------------------------------------------------- sweep


def _small_grids():
    return {
        "linear": [{"ridge_lambda": 0.0}],
        "tree": [{"max_depth": 4, "min_samples_leaf": 1}],
        "mlp": [{"hidden_layers": 1, "iterations": 30}],
    }


def test_sweep_single_interval_single_model():
    cfg = SimConfig(num_transmitters=4, traffic_ipi_s=0.25, duration_s=300.0, seed=21)
    report = sweep_intervals(
        simulate(cfg), intervals=[30.0], model_kinds=("linear",), k=5, seed=0
    )
    assert len(report.rows) == 1
    row = report.rows[0]
    assert row.interval_s == 30.0 and row.model_kind == "linear"
    assert row.mean_rmse is not None and row.note == ""


def test_sweep_insufficient_windows_marked_absent():
    cfg = SimConfig(num_transmitters=2, traffic_ipi_s=0.5, duration_s=120.0, seed=22)
    report = sweep_intervals(
        simulate(cfg),
        intervals=[30.0, 1e6],
        model_kinds=("linear", "tree"),
        k=4,
        seed=0,
        grids=_small_grids(),
    )
    absent = [r for r in report.rows if r.interval_s == 1e6]
    assert len(absent) == 2
    for row in absent:
        assert row.mean_rmse is None
        assert row.note == "insufficient windows"
    present = [r for r in report.rows if r.interval_s == 30.0]
    assert all(r.mean_rmse is not None for r in present)


def test_sweep_empty_intervals_rejected():
    cfg = SimConfig(num_transmitters=2, traffic_ipi_s=1.0, duration_s=60.0, seed=23)
    with pytest.raises(ConfigError):
        sweep_intervals(simulate(cfg), intervals=[])


def test_sweep_csv_and_gnuplot(tmp_path):
    cfg = SimConfig(num_transmitters=4, traffic_ipi_s=0.25, duration_s=240.0, seed=24)
    report = sweep_intervals(
        simulate(cfg),
        intervals=[30.0, 60.0],
        model_kinds=("linear", "tree"),
        k=4,
        seed=0,
        grids=_small_grids(),
    )
    data = sweep_report_to_csv_bytes(report).decode()
    lines = data.splitlines()
    assert lines[0] == SWEEP_HEADER
    assert len(lines) == 1 + len(report.rows)
    written = write_sweep_gnuplot_data(report, tmp_path)
    assert sorted(p.split("sweep_")[-1] for p in written) == ["linear.dat", "tree.dat"]
    body = (tmp_path / "sweep_linear.dat").read_text().splitlines()
    assert body[0].startswith("#")
    assert len(body) == 3  # header + two intervals
    assert all(len(line.split()) == 2 for line in body[1:])


# -------------------------------------------------------------- test eval


def test_evaluate_on_training_set_consistency():
    ds = linearish_dataset(30)
    model = train_model("linear", ds)
    report = evaluate_on_test(model, ds)
    direct = rmse(ds.labels(), predict_batch(model, ds.matrix()))
    assert report.overall_rmse <= direct + 1e-9
    assert len(report.window_start_s) == len(ds)
    pairs = np.sqrt(
        np.mean((np.array(report.true_plr) - np.array(report.predicted_plr)) ** 2)
    )
    assert report.overall_rmse == pytest.approx(pairs)


def test_evaluate_interval_mismatch():
    train = linearish_dataset(31)
    model = train_model("linear", train)
    test = linearish_dataset(32)
    test.interval_s = 15.0
    with pytest.raises(ContractViolation):
        evaluate_on_test(model, test)


def test_evaluate_empty_test_set():
    model = train_model("linear", linearish_dataset(33))
    with pytest.raises(ContractViolation):
        evaluate_on_test(model, Dataset(interval_s=30.0))


def test_test_report_csv():
    ds = linearish_dataset(34, n=12)
    model = train_model("tree", ds, {"max_depth": 3})
    report = evaluate_on_test(model, ds)
    lines = predictions_to_csv_bytes(report).decode().splitlines()
    assert lines[0] == TEST_REPORT_HEADER
    assert len(lines) == 13
    assert all(len(line.split(",")) == 3 for line in lines[1:])
