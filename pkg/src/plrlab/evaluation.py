"""Model selection and assessment.

K-fold cross-validation with per-fold scaler fitting (no test leakage),
hyperparameter grid search, the observation-interval sweep, and held-out
test evaluation. Fold and grid points get isolated seeds derived from
(master seed, fold index, grid index), so parallel and serial execution
would score identically; the reference implementation runs them serially.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, ContractViolation, TrainingError
from .features import Dataset, build_dataset, merge_datasets
from .ioutil import atomic_write_bytes
from .models import MODEL_KINDS, predict_batch, train_model
from .sim.rng import derive_seed
from .sim.trace import Trace

DEFAULT_INTERVALS = (5.0, 10.0, 15.0, 30.0, 60.0)

# small exhaustive grids; listed order decides ties
DEFAULT_GRIDS = {
    "linear": (
        {"ridge_lambda": 0.0},
        {"ridge_lambda": 1e-4},
        {"ridge_lambda": 1e-2},
    ),
    "tree": tuple(
        {"max_depth": d, "min_samples_leaf": m}
        for d in (2, 4, 8, 12)
        for m in (1, 5, 20)
    ),
    "mlp": tuple(
        {
            "hidden_layers": h,
            "units_per_hidden": u,
            "iterations": 2000,
            "learning_rate": 0.1,
        }
        for h in (1, 2, 10)
        for u in (10, 50)
    ),
}

SWEEP_HEADER = "interval_s,model_kind,best_hyperparams,mean_rmse,note"
TEST_REPORT_HEADER = "window_start_s,true_plr,predicted_plr"


@dataclass(frozen=True)
class CvReport:
    model_kind: str
    hyperparams: dict
    k: int
    fold_rmses: tuple
    mean_rmse: float
    std_rmse: float
    interval_s: Optional[float]
    blocked: bool = False  # contiguous-block diagnostic variant


@dataclass(frozen=True)
class SweepRow:
    interval_s: float
    model_kind: str
    best_hyperparams: Optional[dict]
    mean_rmse: Optional[float]
    note: str = ""


@dataclass(frozen=True)
class SweepReport:
    rows: tuple


@dataclass(frozen=True)
class TestReport:
    window_start_s: tuple
    true_plr: tuple
    predicted_plr: tuple
    overall_rmse: float
    interval_s: Optional[float]


def rmse(y, y_hat) -> float:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ContractViolation(f"rmse length mismatch: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise ContractViolation("rmse of empty vectors")
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def kfold_split(n: int, k: int, seed: int):
    """Shuffle 0..n-1 by seed, deal round-robin into k folds."""
    _check_folds(n, k)
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(perm[j::k]) for j in range(k)]


def kfold_split_blocked(n: int, k: int):
    """Contiguous blocks in time order; leakage diagnostic, not the default."""
    _check_folds(n, k)
    return [np.asarray(b) for b in np.array_split(np.arange(n), k)]


def _check_folds(n: int, k: int) -> None:
    if k < 2:
        raise ContractViolation(f"k must be >= 2, got {k}")
    if k > n:
        raise ContractViolation(f"k={k} exceeds sample count n={n}")


def _subset(dataset: Dataset, indices) -> Dataset:
    return Dataset(
        samples=[dataset.samples[i] for i in indices],
        interval_s=dataset.interval_s,
    )


def fit_fold(dataset: Dataset, train_indices, model_kind: str, hyperparams, seed: int):
    """Train one fold's model on exactly the given sample indices.

    The scaler is fit inside train_model on this subset only, so held-out
    samples cannot influence the fit. For the mlp the fold seed becomes the
    weight-init seed unless the hyperparameters pin one explicitly.
    """
    hp = dict(hyperparams) if hyperparams else {}
    if model_kind == "mlp" and "init_seed" not in hp:
        hp["init_seed"] = seed
    return train_model(model_kind, _subset(dataset, train_indices), hp or None)


def cross_validate(
    dataset: Dataset,
    model_kind: str,
    hyperparams: Optional[dict] = None,
    k: int = 10,
    seed: int = 0,
    grid_index: int = 0,
    blocked: bool = False,
) -> CvReport:
    n = len(dataset)
    folds = kfold_split_blocked(n, k) if blocked else kfold_split(n, k, seed)
    everything = np.arange(n)
    fold_rmses = []
    for fi, held_out in enumerate(folds):
        train_idx = np.setdiff1d(everything, held_out)
        fold_seed = derive_seed(seed, fi, grid_index)
        try:
            model = fit_fold(dataset, train_idx, model_kind, hyperparams, fold_seed)
        except Exception as exc:
            raise TrainingError(f"fold {fi} failed: {exc}") from exc
        held = _subset(dataset, held_out)
        preds = predict_batch(model, held.matrix())
        fold_rmses.append(rmse(held.labels(), preds))
    arr = np.asarray(fold_rmses)
    return CvReport(
        model_kind=model_kind,
        hyperparams=dict(hyperparams) if hyperparams else {},
        k=k,
        fold_rmses=tuple(fold_rmses),
        mean_rmse=float(arr.mean()),
        std_rmse=float(arr.std()),
        interval_s=dataset.interval_s,
        blocked=blocked,
    )


def grid_search(
    dataset: Dataset,
    model_kind: str,
    grid: Optional[Sequence[dict]] = None,
    k: int = 10,
    seed: int = 0,
):
    """Exhaustive search; returns (best hyperparams, its CvReport).

    Ties go to the earlier grid entry.
    """
    if grid is None:
        grid = DEFAULT_GRIDS[model_kind]
    grid = list(grid)
    if not grid:
        raise ConfigError("empty grid")
    best_hp, best_report = None, None
    for gi, hp in enumerate(grid):
        report = cross_validate(
            dataset, model_kind, hp, k=k, seed=seed, grid_index=gi
        )
        if best_report is None or report.mean_rmse < best_report.mean_rmse:
            best_hp, best_report = dict(hp), report
    return best_hp, best_report


def sweep_intervals(
    traces,
    intervals: Optional[Sequence[float]] = None,
    model_kinds: Sequence[str] = MODEL_KINDS,
    k: int = 10,
    seed: int = 0,
    grids: Optional[dict] = None,
) -> SweepReport:
    """Rebuild the dataset at each interval and grid-search every model kind.

    Intervals that leave fewer than k windows produce rows marked absent
    with the reason instead of failing the whole sweep.
    """
    if isinstance(traces, Trace):
        traces = [traces]
    traces = list(traces)
    if intervals is None:
        intervals = DEFAULT_INTERVALS
    intervals = list(intervals)
    if not intervals:
        raise ConfigError("empty interval list")
    rows = []
    for interval in intervals:
        parts = [build_dataset(t, interval) for t in traces]
        dataset = merge_datasets(parts)
        if len(dataset) < k:
            for kind in model_kinds:
                rows.append(
                    SweepRow(interval, kind, None, None, note="insufficient windows")
                )
            continue
        for kind in model_kinds:
            grid = grids.get(kind) if grids else None
            best_hp, report = grid_search(dataset, kind, grid, k=k, seed=seed)
            rows.append(SweepRow(interval, kind, best_hp, report.mean_rmse))
    return SweepReport(rows=tuple(rows))


def evaluate_on_test(model, test_dataset: Dataset) -> TestReport:
    """Score a trained model on held-out windows it never saw.

    The dataset must have been built with the model's training interval;
    nothing here refits the scaler or touches parameters.
    """
    if len(test_dataset) == 0:
        raise ContractViolation("empty test set")
    trained_at = model.training_meta.get("interval_s")
    built_at = test_dataset.interval_s
    if trained_at is not None and built_at is not None and trained_at != built_at:
        raise ContractViolation(
            f"model trained at interval {trained_at} s, dataset built at {built_at} s"
        )
    preds = predict_batch(model, test_dataset.matrix())
    labels = test_dataset.labels()
    return TestReport(
        window_start_s=tuple(float(s.window_start_s) for s in test_dataset.samples),
        true_plr=tuple(float(v) for v in labels),
        predicted_plr=tuple(float(v) for v in preds),
        overall_rmse=rmse(labels, preds),
        interval_s=built_at,
    )


# ------------------------------------------------------------ serialization


def sweep_report_to_csv_bytes(report: SweepReport) -> bytes:
    buf = io.StringIO()
    buf.write(SWEEP_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    for row in report.rows:
        w.writerow(
            [
                f"{row.interval_s:g}",
                row.model_kind,
                "" if row.best_hyperparams is None
                else json.dumps(row.best_hyperparams, sort_keys=True),
                "" if row.mean_rmse is None else f"{row.mean_rmse:.6f}",
                row.note,
            ]
        )
    return buf.getvalue().encode("utf-8")


def write_sweep_report(report: SweepReport, path) -> None:
    atomic_write_bytes(path, sweep_report_to_csv_bytes(report))


def write_sweep_gnuplot_data(report: SweepReport, out_dir) -> list:
    """One two-column file per model kind: interval_s vs best mean RMSE."""
    written = []
    kinds = []
    for row in report.rows:
        if row.model_kind not in kinds:
            kinds.append(row.model_kind)
    for kind in kinds:
        lines = ["# interval_s mean_rmse"]
        for row in report.rows:
            if row.model_kind == kind and row.mean_rmse is not None:
                lines.append(f"{row.interval_s:g} {row.mean_rmse:.6f}")
        path = os.path.join(os.fspath(out_dir), f"sweep_{kind}.dat")
        atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))
        written.append(path)
    return written


def format_sweep_table(report: SweepReport) -> str:
    header = f"{'interval_s':>10}  {'model':<7}{'mean_rmse':>10}  note"
    lines = [header, "-" * len(header)]
    for row in report.rows:
        score = "-" if row.mean_rmse is None else f"{row.mean_rmse:.4f}"
        lines.append(
            f"{row.interval_s:>10g}  {row.model_kind:<7}{score:>10}  {row.note}"
        )
    return "\n".join(lines)


def predictions_to_csv_bytes(report: TestReport) -> bytes:
    buf = io.StringIO()
    buf.write(TEST_REPORT_HEADER + "\n")
    for start, truth, pred in zip(
        report.window_start_s, report.true_plr, report.predicted_plr
    ):
        buf.write(f"{start:.6f},{truth:.6f},{pred:.6f}\n")
    return buf.getvalue().encode("utf-8")


def write_test_report(report: TestReport, path) -> None:
    atomic_write_bytes(path, predictions_to_csv_bytes(report))
