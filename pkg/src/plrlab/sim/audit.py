"""Independent trace auditor.

Re-derives what the trace *should* contain using only the emitted TX
intervals plus the reception and interference rules, then compares against
the events actually present. Shares no code with the engine's event loop,
so it acts as a second route to the same answers in tests.

Checks, in order:
  * canonical event ordering (time, then node_id, seq, kind rank)
  * GEN times sit exactly on the per-node tick grid, seq numbers contiguous
  * per-packet accounting: exactly one terminal event per GEN, and the next
    GEN never precedes the previous packet's terminal event
  * TX_START/TX_END pairing with exact airtime, per-node non-overlap
  * attempt count per packet within the retry budget
  * clear-channel rule: nothing else on air (frames or jammer) at the
    instant one CCA period before each TX_START
  * every attempt's RX_OK / RX_ERR / no-event outcome matches
    resolve_reception applied to the reconstructed overlap sets
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation
from .interference import interference_busy_at, interference_overlaps
from .reception import NOT_RECEIVED, RX_ERR, RX_OK, resolve_reception
from .trace import (
    KIND_DROP_CSMA_FAIL,
    KIND_DROP_RETRY_EXHAUST,
    KIND_GEN,
    KIND_RX_ERR,
    KIND_RX_OK,
    KIND_TX_END,
    KIND_TX_START,
    Trace,
)


def _fail(msg: str) -> None:
    raise ContractViolation(f"trace audit: {msg}")


def audit_trace(trace: Trace, *, time_tol: float = 0.0) -> dict:
    """Validate a trace against the model rules; returns summary counters.

    Raises ContractViolation on the first violated invariant. The trace must
    carry its config (simulate() output, or load_trace_csv with config=).
    Engine output satisfies every timing identity exactly; for traces read
    back from CSV pass time_tol=1e-9 to absorb the serialized precision.
    """
    cfg = trace.config
    if cfg is None:
        raise ContractViolation("trace audit: trace has no attached config")
    cfg.validate()
    n = cfg.num_transmitters
    ipi = cfg.traffic_ipi_s
    mac = cfg.mac_params
    frame_s = cfg.payload_bytes * 8.0 / mac.bitrate_bps

    time_s = trace.time_s
    node = trace.node_id
    kind = trace.kind
    seq = trace.seq
    m = len(time_s)

    if m == 0:
        return {"packets": 0, "attempts": 0}

    if node.min() < 1 or node.max() > n:
        _fail("node_id outside 1..num_transmitters")
    if np.any(trace.size_bytes != cfg.payload_bytes):
        _fail("size_bytes differs from configured payload")

    order = np.lexsort((kind, seq, node, time_s))
    if not np.array_equal(order, np.arange(m)):
        _fail("events not in canonical (time, node_id, seq, kind) order")

    summary = {
        "packets": 0,
        "attempts": 0,
        "rx_ok": 0,
        "rx_err": 0,
        "not_received": 0,
        "drop_csma": 0,
        "drop_retry": 0,
    }

    # reconstruct per-node streams
    attempts = []  # (start, end, node_id, seq)
    rx_map = {}  # (node_id, seq, end_time) -> kind code
    for i in range(1, n + 1):
        sel = node == i
        tt = time_s[sel]
        kk = kind[sel]
        ss = seq[sel]

        gen_t = tt[kk == KIND_GEN]
        gen_s = ss[kk == KIND_GEN]
        g = len(gen_t)
        if not np.array_equal(gen_s, np.arange(g)):
            _fail(f"node {i}: GEN seq numbers not contiguous from 0")
        first = (i / n) * ipi
        for t, s in zip(gen_t, gen_s):
            k = round((t - first) / ipi)
            if k < 0 or abs(first + k * ipi - t) > time_tol:
                _fail(f"node {i} seq {s}: GEN at {t!r} off the tick grid")
            if t > cfg.duration_s + time_tol:
                _fail(f"node {i} seq {s}: GEN after duration_s")

        term_mask = (
            (kk == KIND_RX_OK)
            | (kk == KIND_DROP_CSMA_FAIL)
            | (kk == KIND_DROP_RETRY_EXHAUST)
        )
        term_s = ss[term_mask]
        term_t = tt[term_mask]
        if not np.array_equal(np.sort(term_s), np.arange(g)):
            _fail(f"node {i}: packets and terminal events do not match 1:1")
        # single outstanding packet: next GEN at or after previous terminal
        if g > 1:
            by_seq = np.argsort(term_s)
            if np.any(gen_t[1:] < term_t[by_seq][:-1] - time_tol):
                _fail(f"node {i}: GEN before previous packet resolved")

        ts_t = tt[kk == KIND_TX_START]
        ts_s = ss[kk == KIND_TX_START]
        te_t = tt[kk == KIND_TX_END]
        te_s = ss[kk == KIND_TX_END]
        if len(ts_t) != len(te_t):
            _fail(f"node {i}: TX_START/TX_END counts differ")
        for a_t, a_s, b_t, b_s in zip(ts_t, ts_s, te_t, te_s):
            if a_s != b_s:
                _fail(f"node {i}: TX_START/TX_END seq mismatch")
            if abs(b_t - (a_t + frame_s)) > time_tol:
                _fail(f"node {i} seq {a_s}: airtime is not payload/bitrate")
            attempts.append((a_t, b_t, i, int(a_s)))
        if np.any(ts_t[1:] < te_t[:-1] - time_tol):
            _fail(f"node {i}: overlapping own transmissions")
        att_per_seq = np.bincount(ts_s, minlength=g)
        if np.any(att_per_seq > mac.max_frame_retries + 1):
            _fail(f"node {i}: retry budget exceeded")

        for code in (KIND_RX_OK, KIND_RX_ERR):
            for t, s in zip(tt[kk == code], ss[kk == code]):
                rx_map[(i, int(s), float(t))] = code

        summary["packets"] += g
        summary["rx_ok"] += int(np.sum(kk == KIND_RX_OK))
        summary["rx_err"] += int(np.sum(kk == KIND_RX_ERR))
        summary["drop_csma"] += int(np.sum(kk == KIND_DROP_CSMA_FAIL))
        summary["drop_retry"] += int(np.sum(kk == KIND_DROP_RETRY_EXHAUST))

    summary["attempts"] = len(attempts)
    attempts.sort()

    # clear-channel rule, against every other reconstructed interval
    starts = np.array([a[0] for a in attempts], dtype=np.float64)
    ends = np.array([a[1] for a in attempts], dtype=np.float64)
    run_max_end = np.maximum.accumulate(ends) if len(ends) else ends
    for s, e, i, s_no in attempts:
        c = s - mac.cca_s
        if interference_busy_at(cfg.interference, c):
            _fail(f"node {i} seq {s_no}: TX_START with jammer on at CCA")
        hi = int(np.searchsorted(starts, c, side="right"))
        if hi > 0 and run_max_end[hi - 1] > c:
            # some interval with start <= c is still on air at c; own
            # previous attempt cannot reach c, so this is another node
            _fail(f"node {i} seq {s_no}: TX_START with channel busy at CCA")

    # reception outcomes from scratch: sweep for overlap sets
    active: list[int] = []
    overlaps: list[list[tuple[float, int]]] = [[] for _ in attempts]
    for idx, (s, e, i, s_no) in enumerate(attempts):
        active = [a for a in active if attempts[a][1] > s]
        for a in active:
            overlaps[a].append((s, i))
            overlaps[idx].append((attempts[a][0], attempts[a][2]))
        active.append(idx)

    for idx, (s, e, i, s_no) in enumerate(attempts):
        hit = interference_overlaps(cfg.interference, s, e)
        expected = resolve_reception(s, i, overlaps[idx], hit)
        got = rx_map.get((i, s_no, e))
        if expected == RX_OK and got != KIND_RX_OK:
            _fail(f"node {i} seq {s_no} at {e!r}: expected RX_OK")
        if expected == RX_ERR and got != KIND_RX_ERR:
            _fail(f"node {i} seq {s_no} at {e!r}: expected RX_ERR")
        if expected == NOT_RECEIVED:
            if got is not None:
                _fail(f"node {i} seq {s_no} at {e!r}: expected no reception")
            summary["not_received"] += 1

    if summary["rx_ok"] + summary["rx_err"] + summary["not_received"] != summary[
        "attempts"
    ]:
        _fail("per-attempt outcomes do not partition the attempt set")
    if (
        summary["rx_ok"] + summary["drop_csma"] + summary["drop_retry"]
        != summary["packets"]
    ):
        _fail("per-packet accounting identity violated")
    return summary
