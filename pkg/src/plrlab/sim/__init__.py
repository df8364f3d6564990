"""Deterministic discrete-event simulator of a CSMA/CA star sensor network.

The event loop exists twice: a compiled Cython kernel (`_engine_cy`) and a
pure-Python twin (`engine_py`). Both produce bit-identical traces; the
compiled one is picked automatically when available. See `engine.simulate`.
"""

from .config import CsmaParams, InterferencePattern, SimConfig
from .engine import active_backend, simulate
from .interference import interference_busy_at, interference_overlaps, interference_schedule
from .reception import RX_ERR, RX_OK, NOT_RECEIVED, resolve_reception
from .rng import Splitmix64, backoff_delay, derive_seed
from .trace import (
    EVENT_KINDS,
    KIND_DROP_CSMA_FAIL,
    KIND_DROP_RETRY_EXHAUST,
    KIND_GEN,
    KIND_RX_ERR,
    KIND_RX_OK,
    KIND_TX_END,
    KIND_TX_START,
    Trace,
    load_trace_csv,
    write_trace_csv,
)

__all__ = [
    "CsmaParams",
    "InterferencePattern",
    "SimConfig",
    "simulate",
    "active_backend",
    "interference_schedule",
    "interference_busy_at",
    "interference_overlaps",
    "resolve_reception",
    "RX_OK",
    "RX_ERR",
    "NOT_RECEIVED",
    "Splitmix64",
    "backoff_delay",
    "derive_seed",
    "EVENT_KINDS",
    "KIND_GEN",
    "KIND_TX_START",
    "KIND_TX_END",
    "KIND_RX_OK",
    "KIND_RX_ERR",
    "KIND_DROP_CSMA_FAIL",
    "KIND_DROP_RETRY_EXHAUST",
    "Trace",
    "load_trace_csv",
    "write_trace_csv",
]
