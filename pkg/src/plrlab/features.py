"""Windowing and feature extraction: trace -> labeled samples.

One sample per observation window: features x = [d, ipi_s, rp, errp] from
sink-observable events only, label plr from simulator ground-truth GEN
counts. The split keeps trained models deployable on receiver-side
observations while labels stay exact.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import floor

import numpy as np

from .errors import ConfigError, ContractViolation, SchemaError
from .ioutil import atomic_write_bytes
from .sim.config import SimConfig
from .sim.trace import KIND_GEN, KIND_RX_ERR, KIND_RX_OK, Trace

FEATURE_NAMES = ("d", "ipi_s", "rp", "errp")

DATASET_HEADER = "window_start_s,d,ipi_s,rp,errp,plr"


@dataclass(frozen=True)
class FeatureVector:
    d: int
    ipi_s: float
    rp: int
    errp: int

    def as_array(self) -> np.ndarray:
        return np.array([self.d, self.ipi_s, self.rp, self.errp], dtype=np.float64)


@dataclass(frozen=True)
class Sample:
    features: FeatureVector
    plr: float
    window_start_s: float


@dataclass(frozen=True)
class Window:
    """One observation interval's slice of a trace."""

    start_s: float
    interval_s: float
    fallback_ipi_s: float
    time_s: np.ndarray
    node_id: np.ndarray
    kind: np.ndarray

    @property
    def gen_count(self) -> int:
        return int(np.sum(self.kind == KIND_GEN))

    def __len__(self) -> int:
        return len(self.time_s)


@dataclass
class Dataset:
    samples: list[Sample] = field(default_factory=list)
    feature_names: tuple[str, ...] = FEATURE_NAMES
    interval_s: float | None = None
    clamped_windows: int = 0  # stragglers produced rp > gen somewhere

    def __len__(self) -> int:
        return len(self.samples)

    def matrix(self) -> np.ndarray:
        """Feature matrix, one row per sample, columns in FEATURE_NAMES order."""
        if not self.samples:
            return np.empty((0, len(self.feature_names)))
        return np.stack([s.features.as_array() for s in self.samples])

    def labels(self) -> np.ndarray:
        return np.array([s.plr for s in self.samples], dtype=np.float64)

    def window_starts(self) -> np.ndarray:
        return np.array([s.window_start_s for s in self.samples], dtype=np.float64)


def window_trace(
    trace: Trace, interval_s: float, config: SimConfig | None = None
) -> list[Window]:
    """Split a trace into half-open windows [k*interval, (k+1)*interval).

    The window count comes from the generation horizon (config duration),
    so the trailing partial window and any drained events past it are
    discarded. Every retained event lands in exactly one window.
    """
    if not interval_s > 0:
        raise ConfigError("interval_s must be positive")
    cfg = config if config is not None else trace.config
    if cfg is None:
        raise ContractViolation("window_trace needs a config for this trace")
    count = floor(cfg.duration_s / interval_s)
    fallback = cfg.traffic_ipi_s

    # one pass: events are time-sorted, searchsorted finds the boundaries
    edges = interval_s * np.arange(count + 1)
    idx = np.searchsorted(trace.time_s, edges, side="left")
    windows = []
    for k in range(count):
        lo, hi = idx[k], idx[k + 1]
        windows.append(
            Window(
                start_s=float(edges[k]),
                interval_s=interval_s,
                fallback_ipi_s=fallback,
                time_s=trace.time_s[lo:hi],
                node_id=trace.node_id[lo:hi],
                kind=trace.kind[lo:hi],
            )
        )
    return windows


def extract_features(window: Window) -> FeatureVector:
    """Sink-side features for one window.

    d counts distinct transmitters seen in correct or erroneous frames; the
    IPI estimate is the median over detected nodes of each node's median gap
    between consecutive sink arrivals, falling back to the configured rate
    when no node shows two arrivals.
    """
    arrived = (window.kind == KIND_RX_OK) | (window.kind == KIND_RX_ERR)
    rp = int(np.sum(window.kind == KIND_RX_OK))
    errp = int(np.sum(window.kind == KIND_RX_ERR))
    nodes = window.node_id[arrived]
    times = window.time_s[arrived]
    detected = np.unique(nodes)
    d = int(len(detected))

    per_node_medians = []
    for nid in detected:
        t = times[nodes == nid]
        if len(t) >= 2:
            per_node_medians.append(float(np.median(np.diff(t))))
    if per_node_medians:
        ipi = float(np.median(np.array(per_node_medians)))
    else:
        ipi = window.fallback_ipi_s
    return FeatureVector(d=d, ipi_s=ipi, rp=rp, errp=errp)


def compute_label(
    window: Window, ground_truth_gen_count: int, diagnostics: dict | None = None
) -> float:
    """plr = 1 - rp/gen, clamped to [0,1]; gen = 0 means nothing to lose.

    rp > gen happens when a packet generated in the previous window arrives
    in this one; the clamp keeps the label in range and the event is tallied
    in diagnostics["clamped_windows"] when a dict is supplied.
    """
    rp = int(np.sum(window.kind == KIND_RX_OK))
    if ground_truth_gen_count <= 0:
        return 0.0
    plr = 1.0 - rp / ground_truth_gen_count
    if plr < 0.0:
        if diagnostics is not None:
            diagnostics["clamped_windows"] = diagnostics.get("clamped_windows", 0) + 1
        return 0.0
    if plr > 1.0:
        return 1.0
    return plr


def build_dataset(
    trace: Trace,
    interval_s: float,
    config: SimConfig | None = None,
    horizon: int = 0,
) -> Dataset:
    """Compose windowing, feature extraction, and labeling, in window order.

    horizon shifts labels forward: sample k pairs window k's features with
    window (k + horizon)'s plr, dropping the last horizon windows. The
    default 0 labels each window with its own loss rate.
    """
    if horizon < 0:
        raise ConfigError("horizon must be >= 0")
    windows = window_trace(trace, interval_s, config)
    diagnostics: dict = {}
    labels = [compute_label(w, w.gen_count, diagnostics) for w in windows]
    ds = Dataset(interval_s=interval_s)
    stop = len(windows) - horizon
    for k in range(max(stop, 0)):
        w = windows[k]
        ds.samples.append(
            Sample(
                features=extract_features(w),
                plr=labels[k + horizon],
                window_start_s=w.start_s,
            )
        )
    ds.clamped_windows = diagnostics.get("clamped_windows", 0)
    return ds


def merge_datasets(parts: list[Dataset]) -> Dataset:
    """Concatenate per-trace datasets (corpus order); intervals must agree."""
    merged = Dataset()
    for p in parts:
        if p.interval_s is not None:
            if merged.interval_s is None:
                merged.interval_s = p.interval_s
            elif merged.interval_s != p.interval_s:
                raise ContractViolation("cannot merge datasets with mixed intervals")
        merged.samples.extend(p.samples)
        merged.clamped_windows += p.clamped_windows
    return merged


def dataset_to_csv_bytes(dataset: Dataset) -> bytes:
    buf = io.StringIO()
    buf.write(DATASET_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    for s in dataset.samples:
        w.writerow(
            [
                f"{s.window_start_s:.6f}",
                s.features.d,
                f"{s.features.ipi_s:.6f}",
                s.features.rp,
                s.features.errp,
                f"{s.plr:.6f}",
            ]
        )
    return buf.getvalue().encode("utf-8")


def write_dataset_csv(dataset: Dataset, path) -> None:
    atomic_write_bytes(path, dataset_to_csv_bytes(dataset))


def load_dataset_csv(path) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty dataset file", field_path=str(path)) from None
        if header != DATASET_HEADER.split(","):
            raise SchemaError(
                f"bad dataset header {header!r}", field_path=f"{path}:1"
            )
        ds = Dataset()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise SchemaError(
                    f"expected 6 columns, got {len(row)}", field_path=f"{path}:{lineno}"
                )
            try:
                start, d, ipi, rp, errp, plr = (
                    float(row[0]),
                    int(row[1]),
                    float(row[2]),
                    int(row[3]),
                    int(row[4]),
                    float(row[5]),
                )
            except ValueError as exc:
                raise SchemaError(str(exc), field_path=f"{path}:{lineno}") from None
            ds.samples.append(
                Sample(
                    features=FeatureVector(d=d, ipi_s=ipi, rp=rp, errp=errp),
                    plr=plr,
                    window_start_s=start,
                )
            )
    starts = ds.window_starts()
    if len(starts) >= 2:
        gaps = np.diff(np.unique(starts))
        gaps = gaps[gaps > 0]
        if len(gaps):
            ds.interval_s = float(gaps.min())
    return ds
