"""Packet-level event traces and their CSV form.

A trace is stored column-wise (numpy arrays) because runs at the heaviest
grid points emit millions of events. Event kinds are small integer codes in
declaration order, which doubles as the tie-break rank for equal timestamps.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
import pandas as pd

from ..errors import SchemaError
from ..ioutil import atomic_write_bytes
from .config import SimConfig

EVENT_KINDS = (
    "GEN",
    "TX_START",
    "TX_END",
    "RX_OK",
    "RX_ERR",
    "DROP_CSMA_FAIL",
    "DROP_RETRY_EXHAUST",
)
KIND_GEN = 0
KIND_TX_START = 1
KIND_TX_END = 2
KIND_RX_OK = 3
KIND_RX_ERR = 4
KIND_DROP_CSMA_FAIL = 5
KIND_DROP_RETRY_EXHAUST = 6

_KIND_CODE = {name: code for code, name in enumerate(EVENT_KINDS)}

TRACE_HEADER = "time_s,node_id,kind,seq,size_bytes"


@dataclass(frozen=True)
class TraceEvent:
    time_s: float
    node_id: int
    kind: str
    seq: int
    size_bytes: int


@dataclass
class Trace:
    """Ordered MAC/PHY event log of one simulation run."""

    config: Optional[SimConfig]
    time_s: np.ndarray  # float64
    node_id: np.ndarray  # int32
    kind: np.ndarray  # int8 codes into EVENT_KINDS
    seq: np.ndarray  # int32, per-node counter
    size_bytes: np.ndarray  # int32

    def __len__(self) -> int:
        return len(self.time_s)

    def __iter__(self) -> Iterator[TraceEvent]:
        for i in range(len(self.time_s)):
            yield TraceEvent(
                float(self.time_s[i]),
                int(self.node_id[i]),
                EVENT_KINDS[self.kind[i]],
                int(self.seq[i]),
                int(self.size_bytes[i]),
            )

    @property
    def duration_s(self) -> float:
        if self.config is None:
            raise ValueError("trace has no attached config; duration unknown")
        return self.config.duration_s

    def kind_count(self, kind: str) -> int:
        return int(np.count_nonzero(self.kind == _KIND_CODE[kind]))

    def aggregate_plr(self) -> float:
        """Whole-trace loss rate: 1 - received/generated (0 for an empty trace)."""
        gen = self.kind_count("GEN")
        if gen == 0:
            return 0.0
        return 1.0 - self.kind_count("RX_OK") / gen

    def equals(self, other: "Trace") -> bool:
        """Exact (bitwise) event equality; configs are not compared."""
        return (
            np.array_equal(self.time_s, other.time_s)
            and np.array_equal(self.node_id, other.node_id)
            and np.array_equal(self.kind, other.kind)
            and np.array_equal(self.seq, other.seq)
            and np.array_equal(self.size_bytes, other.size_bytes)
        )


def trace_to_csv_bytes(trace: Trace) -> bytes:
    """Serialize with the fixed header; times carry 9 decimal places."""
    buf = io.StringIO()
    df = pd.DataFrame(
        {
            "time_s": trace.time_s,
            "node_id": trace.node_id,
            "kind": pd.Categorical.from_codes(trace.kind, categories=list(EVENT_KINDS)),
            "seq": trace.seq,
            "size_bytes": trace.size_bytes,
        }
    )
    df.to_csv(buf, index=False, float_format="%.9f", lineterminator="\n")
    return buf.getvalue().encode("utf-8")


def write_trace_csv(trace: Trace, path: str) -> None:
    atomic_write_bytes(path, trace_to_csv_bytes(trace))


def load_trace_csv(path: str, config: Optional[SimConfig] = None) -> Trace:
    """Read a trace CSV; pass the config that produced it when known."""
    try:
        df = pd.read_csv(
            path,
            dtype={
                "time_s": np.float64,
                "node_id": np.int32,
                "kind": "category",
                "seq": np.int32,
                "size_bytes": np.int32,
            },
        )
    except (ValueError, pd.errors.ParserError) as exc:
        raise SchemaError(f"trace CSV {path} unreadable: {exc}") from exc
    missing = [c for c in TRACE_HEADER.split(",") if c not in df.columns]
    if missing:
        raise SchemaError(f"trace CSV {path} missing columns {missing}")
    mapped = df["kind"].map(_KIND_CODE)
    if mapped.isna().any():  # unmapped kind tokens become NaN
        bad = sorted(set(df["kind"].unique()) - set(EVENT_KINDS))
        raise SchemaError(f"trace CSV {path} has unknown event kinds: {bad}")
    codes = mapped.astype(np.int8).to_numpy()
    return Trace(
        config=config,
        time_s=df["time_s"].to_numpy(),
        node_id=df["node_id"].to_numpy(),
        kind=codes,
        seq=df["seq"].to_numpy(),
        size_bytes=df["size_bytes"].to_numpy(),
    )


def conservation_counts(trace: Trace) -> dict[int, dict[str, int]]:
    """Per-transmitter GEN / RX_OK / DROP_* tallies for the accounting identity."""
    out: dict[int, dict[str, int]] = {}
    nodes = np.unique(trace.node_id)
    for node in nodes:
        if node == 0:
            continue
        mask = trace.node_id == node
        kinds = trace.kind[mask]
        out[int(node)] = {
            "gen": int(np.count_nonzero(kinds == KIND_GEN)),
            "rx_ok": int(np.count_nonzero(kinds == KIND_RX_OK)),
            "drop_csma": int(np.count_nonzero(kinds == KIND_DROP_CSMA_FAIL)),
            "drop_retry": int(np.count_nonzero(kinds == KIND_DROP_RETRY_EXHAUST)),
        }
    return out
