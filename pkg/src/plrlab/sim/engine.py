"""Backend selection and the public ``simulate`` entry point.

Two interchangeable kernels exist: a compiled Cython extension
(``_engine_cy``, preferred) and a pure-Python twin (``engine_py``). They
execute the same operations in the same order, so their traces are
bit-identical; the extension is only faster. Selection happens per call:
the PLRLAB_ENGINE environment variable ("cython" or "python") forces a
backend, otherwise the extension is used when importable.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ConfigError
from . import engine_py
from .config import SimConfig
from .rng import derive_seed
from .trace import Trace

try:
    from . import _engine_cy  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on build environment
    _engine_cy = None

_ENV_VAR = "PLRLAB_ENGINE"
_BACKENDS = ("cython", "python")


def available_backends() -> tuple[str, ...]:
    """Names of kernels importable in this environment."""
    if _engine_cy is not None:
        return ("cython", "python")
    return ("python",)


def _resolve_backend(backend: str | None) -> str:
    name = backend if backend is not None else os.environ.get(_ENV_VAR, "")
    name = name.strip().lower()
    if name == "":
        return "cython" if _engine_cy is not None else "python"
    if name not in _BACKENDS:
        raise ConfigError(
            f"unknown engine backend {name!r}, expected one of {_BACKENDS}"
        )
    if name == "cython" and _engine_cy is None:
        raise ConfigError("cython engine requested but the extension is not built")
    return name


def active_backend() -> str:
    """Backend that simulate() would use right now."""
    return _resolve_backend(None)


def simulate(config: SimConfig, backend: str | None = None) -> Trace:
    """Run one deterministic simulation and return its event trace.

    `backend` overrides the default kernel choice ("cython" or "python");
    both produce identical traces for the same config.
    """
    config.validate()
    name = _resolve_backend(backend)
    kernel = engine_py.run_kernel if name == "python" else _engine_cy.run_kernel

    n = config.num_transmitters
    node_seeds = np.array(
        [derive_seed(config.seed, j + 1) for j in range(n)], dtype=np.uint64
    )
    intf = config.interference
    mac = config.mac_params

    time_s, node_id, kind, seq = kernel(
        n,
        config.traffic_ipi_s,
        config.duration_s,
        config.payload_bytes,
        mac.min_be,
        mac.max_be,
        mac.max_csma_backoffs,
        mac.max_frame_retries,
        mac.unit_backoff_s,
        mac.cca_s,
        mac.bitrate_bps,
        mac.ack_enabled,
        mac.ack_timeout_s,
        intf is not None,
        intf.on_s if intf is not None else 0.0,
        intf.off_s if intf is not None else 0.0,
        intf.start_s if intf is not None else 0.0,
        node_seeds,
    )

    # canonical event order: time, then node_id, seq, kind rank
    order = np.lexsort((kind, seq, node_id, time_s))
    size = np.full(len(time_s), config.payload_bytes, dtype=np.int32)
    return Trace(
        config=config,
        time_s=np.ascontiguousarray(time_s[order]),
        node_id=np.ascontiguousarray(node_id[order]),
        kind=np.ascontiguousarray(kind[order]),
        seq=np.ascontiguousarray(seq[order]),
        size_bytes=size,
    )
