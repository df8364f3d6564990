"""Pure-Python event-loop kernel (fallback backend).

This file and `_engine_cy.pyx` implement the same state machine with the same
sequence of float64 and uint64 operations; any edit here must be mirrored
there, or the bit-identical-trace guarantee between backends breaks.

Model summary (node 0 is the sink and is passive):
  * Each transmitter ticks at first + k*ipi, first = (node_id/n)*ipi, while
    the tick time is <= duration. A tick that lands while the previous packet
    is still in service is skipped (single outstanding packet per node), so
    the per-node accounting identity GEN = RX_OK + drops always closes.
  * Unslotted CSMA/CA: random backoff in {0..2^BE-1} units, instantaneous
    channel check after the backoff, transmit cca_s later if idle. Busy
    checks count both in-progress frames and jammer bursts.
  * Reception at the frame end: captured iff no overlapping frame started
    earlier (ties to the lower node id); captured frames decode iff nothing
    overlapped them and no jammer burst touched them.
  * With acks on, the sender learns the outcome ack_timeout_s after the frame
    end and retries (fresh CSMA round) up to max_frame_retries times. Acks
    are ideal: always delivered, never occupying the channel.
  * Packets in service when the tick grid ends are drained to a terminal
    event, so traces may extend slightly past duration_s.
"""

from __future__ import annotations

from array import array
from math import floor, fmod

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_INF = float("inf")

# node lifecycle steps (next_kind values)
_TICK = 0
_CCA = 1
_TXSTART = 2
_TXEND = 3
_RESOLVE = 4

# emitted event codes (= trace.EVENT_KINDS order)
_E_GEN = 0
_E_TX_START = 1
_E_TX_END = 2
_E_RX_OK = 3
_E_RX_ERR = 4
_E_DROP_CSMA = 5
_E_DROP_RETRY = 6

_OUT_OK = 0
_OUT_ERR = 1
_OUT_LOST = 2


def run_kernel(
    n: int,
    ipi: float,
    duration: float,
    payload: int,
    min_be: int,
    max_be: int,
    max_nb: int,
    max_retries: int,
    unit: float,
    cca: float,
    bitrate: float,
    ack_enabled: bool,
    ack_to: float,
    has_intf: bool,
    i_on: float,
    i_off: float,
    i_start: float,
    node_seeds: np.ndarray,
):
    """Run one simulation; returns (time, node, kind, seq) event columns."""
    frame_s = payload * 8.0 / bitrate
    i_period = i_on + i_off

    first = [0.0] * n
    tick_k = [0] * n
    seq_next = [0] * n
    cur_seq = [0] * n
    nb = [0] * n
    be = [0] * n
    retries = [0] * n
    rng_state = [0] * n
    in_tx = [False] * n
    tx_start = [0.0] * n
    tx_end = [0.0] * n
    ovl = [False] * n
    pre = [False] * n
    outcome = [0] * n
    next_t = [_INF] * n
    next_kind = [_TICK] * n

    for j in range(n):
        first[j] = ((j + 1) / n) * ipi
        rng_state[j] = int(node_seeds[j])
        # first tick (k = 0) if it falls within the run
        tt = first[j] + 0 * ipi
        if tt <= duration:
            next_t[j] = tt
            next_kind[j] = _TICK

    ev_time = array("d")
    ev_node = array("i")
    ev_kind = array("b")
    ev_seq = array("i")

    def emit(t: float, node: int, kind: int, seq: int) -> None:
        ev_time.append(t)
        ev_node.append(node)
        ev_kind.append(kind)
        ev_seq.append(seq)

    def draw_backoff(j: int, exponent: int) -> float:
        state = (rng_state[j] + _GAMMA) & _MASK64
        rng_state[j] = state
        z = ((state ^ (state >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        z ^= z >> 31
        return (z & ((1 << exponent) - 1)) * unit

    # same arithmetic as interference.interference_busy_at / _overlaps, kept
    # in fmod/floor form so the C translation is operation-identical
    def intf_busy_at(t: float) -> bool:
        dt = t - i_start
        if dt < 0.0:
            return False
        if i_off == 0.0:
            return True
        return fmod(dt, i_period) < i_on

    def intf_overlaps(s: float, e: float) -> bool:
        if e <= i_start:
            return False
        a = s if s > i_start else i_start
        if i_off == 0.0:
            return True
        k = floor((a - i_start) / i_period)
        busy_begin = i_start + k * i_period
        if a < busy_begin + i_on:
            return True
        return busy_begin + i_period < e

    def schedule_idle(j: int, t: float) -> None:
        # next tick at or after t; ticks stop once past duration
        k = tick_k[j]
        tt = first[j] + k * ipi
        while tt < t:
            k += 1
            tt = first[j] + k * ipi
        tick_k[j] = k
        if tt <= duration:
            next_t[j] = tt
            next_kind[j] = _TICK
        else:
            next_t[j] = _INF

    while True:
        best = -1
        bt = _INF
        for j in range(n):
            if next_t[j] < bt:
                bt = next_t[j]
                best = j
        if best < 0:
            break
        j = best
        t = bt
        node = j + 1
        kind = next_kind[j]

        if kind == _TICK:
            emit(t, node, _E_GEN, seq_next[j])
            cur_seq[j] = seq_next[j]
            seq_next[j] += 1
            tick_k[j] += 1
            retries[j] = 0
            nb[j] = 0
            be[j] = min_be
            next_t[j] = t + draw_backoff(j, be[j])
            next_kind[j] = _CCA

        elif kind == _CCA:
            busy = intf_busy_at(t) if has_intf else False
            if not busy:
                for j2 in range(n):
                    if j2 == j:
                        continue
                    # in-progress frames, plus frames committed to start at
                    # exactly this instant (their TX_START has not popped yet)
                    if (in_tx[j2] and t < tx_end[j2]) or (
                        next_kind[j2] == _TXSTART and next_t[j2] == t
                    ):
                        busy = True
                        break
            if not busy:
                next_t[j] = t + cca
                next_kind[j] = _TXSTART
            else:
                nb[j] += 1
                if be[j] < max_be:
                    be[j] += 1
                if nb[j] > max_nb:
                    emit(t, node, _E_DROP_CSMA, cur_seq[j])
                    schedule_idle(j, t)
                else:
                    next_t[j] = t + cca + draw_backoff(j, be[j])
                    next_kind[j] = _CCA

        elif kind == _TXSTART:
            emit(t, node, _E_TX_START, cur_seq[j])
            end = t + frame_s
            any_ovl = False
            for j2 in range(n):
                if j2 != j and in_tx[j2] and t < tx_end[j2]:
                    ovl[j2] = True
                    any_ovl = True
            in_tx[j] = True
            tx_start[j] = t
            tx_end[j] = end
            ovl[j] = any_ovl
            pre[j] = any_ovl  # every live overlapper started no later than us
            next_t[j] = end
            next_kind[j] = _TXEND

        elif kind == _TXEND:
            emit(t, node, _E_TX_END, cur_seq[j])
            in_tx[j] = False
            hit = intf_overlaps(tx_start[j], t) if has_intf else False
            if not pre[j]:
                if not ovl[j] and not hit:
                    outcome[j] = _OUT_OK
                    emit(t, node, _E_RX_OK, cur_seq[j])
                else:
                    outcome[j] = _OUT_ERR
                    emit(t, node, _E_RX_ERR, cur_seq[j])
            else:
                outcome[j] = _OUT_LOST
            if ack_enabled:
                next_t[j] = t + ack_to
                next_kind[j] = _RESOLVE
            else:
                # fire and forget: a failed only attempt still terminates the
                # packet, so the accounting identity closes in this mode too
                if outcome[j] != _OUT_OK:
                    emit(t, node, _E_DROP_RETRY, cur_seq[j])
                schedule_idle(j, t)

        else:  # _RESOLVE
            if outcome[j] == _OUT_OK:
                schedule_idle(j, t)
            else:
                retries[j] += 1
                if retries[j] > max_retries:
                    emit(t, node, _E_DROP_RETRY, cur_seq[j])
                    schedule_idle(j, t)
                else:
                    nb[j] = 0
                    be[j] = min_be
                    next_t[j] = t + draw_backoff(j, be[j])
                    next_kind[j] = _CCA

    return (
        np.frombuffer(ev_time, dtype=np.float64).copy(),
        np.frombuffer(ev_node, dtype=np.intc).astype(np.int32),
        np.frombuffer(ev_kind, dtype=np.int8).copy(),
        np.frombuffer(ev_seq, dtype=np.intc).astype(np.int32),
    )
