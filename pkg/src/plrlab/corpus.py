"""Seeded simulation corpora: the load/interference grid plus replay scenarios.

A corpus is the full cross product of node counts, per-node packet rates,
and interference scenarios, one trace file per point, listed in a manifest
with exact configs, seeds, and content hashes. Train and test corpora share
the grid but derive disjoint seeds, so the test set is new data of equal
shape.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, SchemaError
from .ioutil import atomic_write_bytes
from .sim import InterferencePattern, SimConfig, derive_seed, simulate
from .sim.trace import load_trace_csv, trace_to_csv_bytes

DEFAULT_NODE_COUNTS = (2, 4, 8, 16, 28)
# reciprocals of the 1/2..64 pckts/s load ladder
DEFAULT_IPI_GRID_S = (2.0, 1.0, 0.5, 0.25, 0.125, 0.0625, 0.015625)
DEFAULT_INTERFERENCE = (None, InterferencePattern(on_s=0.002, off_s=0.008))
DEFAULT_POINT_DURATION_S = 1080.0  # 70 points x 1080 s ~= 21 h aggregate
FAST_POINT_DURATION_S = 60.0

# seed-derivation codes; train and test corpora must never share a stream
TRAIN_SPLIT = 0
TEST_SPLIT = 1
REPLAY_SPLIT = 2

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class CorpusSpec:
    node_counts: tuple = DEFAULT_NODE_COUNTS
    ipi_grid_s: tuple = DEFAULT_IPI_GRID_S
    interference_scenarios: tuple = DEFAULT_INTERFERENCE
    per_point_duration_s: float = DEFAULT_POINT_DURATION_S
    master_seed: int = 42

    def validate(self) -> None:
        if not self.node_counts:
            raise ConfigError("empty grid: node_counts")
        if not self.ipi_grid_s:
            raise ConfigError("empty grid: ipi_grid_s")
        if not self.interference_scenarios:
            raise ConfigError("empty grid: interference_scenarios")
        if self.per_point_duration_s <= 0:
            raise ConfigError("per_point_duration_s must be positive")

    def to_dict(self) -> dict:
        return {
            "node_counts": list(self.node_counts),
            "ipi_grid_s": list(self.ipi_grid_s),
            "interference_scenarios": [
                None if p is None else {"on_s": p.on_s, "off_s": p.off_s, "start_s": p.start_s}
                for p in self.interference_scenarios
            ],
            "per_point_duration_s": self.per_point_duration_s,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CorpusSpec":
        try:
            scenarios = tuple(
                None if p is None else InterferencePattern(**p)
                for p in doc.get("interference_scenarios", DEFAULT_INTERFERENCE_DOC)
            )
            spec = cls(
                node_counts=tuple(doc.get("node_counts", DEFAULT_NODE_COUNTS)),
                ipi_grid_s=tuple(doc.get("ipi_grid_s", DEFAULT_IPI_GRID_S)),
                interference_scenarios=scenarios,
                per_point_duration_s=float(
                    doc.get("per_point_duration_s", DEFAULT_POINT_DURATION_S)
                ),
                master_seed=int(doc.get("master_seed", 42)),
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"bad corpus spec: {exc}") from None
        spec.validate()
        return spec


DEFAULT_INTERFERENCE_DOC = [
    None if p is None else {"on_s": p.on_s, "off_s": p.off_s, "start_s": p.start_s}
    for p in DEFAULT_INTERFERENCE
]


def grid_points(spec: CorpusSpec):
    """(index, node_count, ipi_s, interference) in fixed grid order."""
    spec.validate()
    points = []
    index = 0
    for n in spec.node_counts:
        for ipi in spec.ipi_grid_s:
            for intf in spec.interference_scenarios:
                points.append((index, n, ipi, intf))
                index += 1
    return points


def point_config(spec: CorpusSpec, index: int, n: int, ipi: float, intf, split: int) -> SimConfig:
    return SimConfig(
        num_transmitters=n,
        traffic_ipi_s=ipi,
        duration_s=spec.per_point_duration_s,
        interference=intf,
        seed=derive_seed(spec.master_seed, split, index),
    )


def trace_filename(index: int, n: int, ipi: float, intf) -> str:
    ipi_token = f"{ipi:g}".replace(".", "p")
    jam = "jam" if intf is not None else "clear"
    return f"trace_{index:03d}_n{n:02d}_ipi{ipi_token}_{jam}.csv"


def _simulate_point(args):
    # worker-safe: rebuild the config from plain dicts, return bytes
    index, filename, config_doc = args
    config = SimConfig.from_dict(config_doc)
    trace = simulate(config)
    data = trace_to_csv_bytes(trace)
    return index, filename, config_doc, len(trace.time_s), data


def generate_corpus(
    spec: CorpusSpec,
    out_dir,
    split: int = TRAIN_SPLIT,
    workers: int = 0,
    progress=None,
) -> dict:
    """Simulate every grid point into out_dir and return the manifest.

    Output order in the manifest is grid order regardless of worker count,
    so parallel and serial runs produce identical manifests.
    """
    spec.validate()
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    jobs = []
    for index, n, ipi, intf in grid_points(spec):
        config = point_config(spec, index, n, ipi, intf, split)
        jobs.append((index, trace_filename(index, n, ipi, intf), config.to_dict()))

    entries = []
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_simulate_point, jobs)
            entries = [_write_point(out_dir, r, progress) for r in results]
    else:
        entries = [_write_point(out_dir, _simulate_point(j), progress) for j in jobs]

    manifest = {
        "schema_version": "1",
        "split": {TRAIN_SPLIT: "train", TEST_SPLIT: "test", REPLAY_SPLIT: "replay"}[split],
        "spec": spec.to_dict(),
        "traces": entries,
    }
    atomic_write_bytes(
        os.path.join(out_dir, MANIFEST_NAME),
        (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"),
    )
    return manifest


def _write_point(out_dir, result, progress):
    index, filename, config_doc, num_events, data = result
    atomic_write_bytes(os.path.join(out_dir, filename), data)
    if progress is not None:
        progress(filename, num_events)
    return {
        "file": filename,
        "index": index,
        "config": config_doc,
        "seed": config_doc["seed"],
        "num_events": num_events,
        "sha256": hashlib.sha256(data).hexdigest(),
    }


def load_manifest(corpus_dir) -> dict:
    path = os.path.join(os.fspath(corpus_dir), MANIFEST_NAME)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read manifest: {exc}", field_path=path) from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest is not valid JSON: {exc}", field_path=path) from None
    if doc.get("schema_version") != "1":
        raise SchemaError(
            f"unsupported manifest schema_version {doc.get('schema_version')!r}",
            field_path=f"{path}:schema_version",
        )
    if not isinstance(doc.get("traces"), list):
        raise SchemaError("manifest has no trace list", field_path=f"{path}:traces")
    return doc


def iter_corpus_traces(corpus_dir, manifest: Optional[dict] = None):
    """Yield Trace objects in manifest order, configs re-attached."""
    corpus_dir = os.fspath(corpus_dir)
    if manifest is None:
        manifest = load_manifest(corpus_dir)
    for entry in manifest["traces"]:
        config = SimConfig.from_dict(entry["config"])
        yield load_trace_csv(os.path.join(corpus_dir, entry["file"]), config)


# ----------------------------------------------------------- replay corpus

REPLAY_SCENARIOS = ("benign", "jam-mid-run")


def replay_scenario(name: str, master_seed: int = 42, duration_s: float = 600.0) -> SimConfig:
    """Controller replay inputs.

    benign: light load, clean channel; predicted plr should trail near zero.
    jam-mid-run: heavy load, the grid's duty-cycled interferer switching on at
    the midpoint. The duty cycle matches the training corpus on purpose: a
    continuous jam would silence the receiver entirely, and a receiver-side
    model has no evidence to tell dead air from an idle network. Corrupted
    frames keep errp/rp informative, so loss steps from ~0.08 to ~0.45.
    """
    if name == "benign":
        return SimConfig(
            num_transmitters=2,
            traffic_ipi_s=2.0,
            duration_s=duration_s,
            interference=None,
            seed=derive_seed(master_seed, REPLAY_SPLIT, 0),
        )
    if name == "jam-mid-run":
        return SimConfig(
            num_transmitters=28,
            traffic_ipi_s=0.125,
            duration_s=duration_s,
            interference=InterferencePattern(
                on_s=0.002, off_s=0.008, start_s=duration_s / 2.0
            ),
            seed=derive_seed(master_seed, REPLAY_SPLIT, 1),
        )
    raise ConfigError(f"unknown replay scenario {name!r}; know {REPLAY_SCENARIOS}")
