# cython: language_level=3, boundscheck=False, wraparound=False
# cython: nonecheck=False, initializedcheck=False, cdivision=True
"""Compiled event-loop kernel.

Operation-for-operation twin of engine_py.run_kernel: same state machine,
same float64/uint64 expressions in the same order, so traces are
bit-identical across backends. Keep the two files in sync. Compiled with
-ffp-contract=off so the C side cannot fuse multiply-adds the Python side
performs as two rounded steps.
"""

from libc.math cimport INFINITY, floor, fmod
from libc.stdint cimport int8_t, int32_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef uint64_t _GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t _MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t _MIX2 = 0x94D049BB133111EBULL

cdef enum:
    TICK = 0
    CCA = 1
    TXSTART = 2
    TXEND = 3
    RESOLVE = 4

cdef enum:
    E_GEN = 0
    E_TX_START = 1
    E_TX_END = 2
    E_RX_OK = 3
    E_RX_ERR = 4
    E_DROP_CSMA = 5
    E_DROP_RETRY = 6

cdef enum:
    OUT_OK = 0
    OUT_ERR = 1
    OUT_LOST = 2


cdef struct Buf:
    double* t
    int32_t* node
    int8_t* kind
    int32_t* seq
    Py_ssize_t n
    Py_ssize_t cap


cdef int buf_init(Buf* b, Py_ssize_t cap) except -1:
    b.n = 0
    b.cap = cap
    b.t = <double*> malloc(cap * sizeof(double))
    b.node = <int32_t*> malloc(cap * sizeof(int32_t))
    b.kind = <int8_t*> malloc(cap * sizeof(int8_t))
    b.seq = <int32_t*> malloc(cap * sizeof(int32_t))
    if b.t == NULL or b.node == NULL or b.kind == NULL or b.seq == NULL:
        raise MemoryError("event buffer allocation failed")
    return 0


cdef void buf_free(Buf* b) noexcept:
    free(b.t)
    free(b.node)
    free(b.kind)
    free(b.seq)


cdef int buf_push(Buf* b, double t, int32_t node, int8_t kind,
                  int32_t seq) except -1:
    cdef Py_ssize_t cap
    if b.n == b.cap:
        cap = b.cap * 2
        b.t = <double*> realloc(b.t, cap * sizeof(double))
        b.node = <int32_t*> realloc(b.node, cap * sizeof(int32_t))
        b.kind = <int8_t*> realloc(b.kind, cap * sizeof(int8_t))
        b.seq = <int32_t*> realloc(b.seq, cap * sizeof(int32_t))
        if b.t == NULL or b.node == NULL or b.kind == NULL or b.seq == NULL:
            raise MemoryError("event buffer growth failed")
        b.cap = cap
    b.t[b.n] = t
    b.node[b.n] = node
    b.kind[b.n] = kind
    b.seq[b.n] = seq
    b.n += 1
    return 0


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * _MIX1
    z = (z ^ (z >> 27)) * _MIX2
    return z ^ (z >> 31)


def run_kernel(
    int n,
    double ipi,
    double duration,
    int payload,
    int min_be,
    int max_be,
    int max_nb,
    int max_retries,
    double unit,
    double cca,
    double bitrate,
    bint ack_enabled,
    double ack_to,
    bint has_intf,
    double i_on,
    double i_off,
    double i_start,
    const uint64_t[::1] node_seeds,
):
    """Run one simulation; returns (time, node, kind, seq) event columns."""
    cdef double frame_s = payload * 8.0 / bitrate
    cdef double i_period = i_on + i_off

    cdef double* first = <double*> malloc(n * sizeof(double))
    cdef int64_t* tick_k = <int64_t*> malloc(n * sizeof(int64_t))
    cdef int32_t* seq_next = <int32_t*> malloc(n * sizeof(int32_t))
    cdef int32_t* cur_seq = <int32_t*> malloc(n * sizeof(int32_t))
    cdef int* nb = <int*> malloc(n * sizeof(int))
    cdef int* be = <int*> malloc(n * sizeof(int))
    cdef int* retries = <int*> malloc(n * sizeof(int))
    cdef uint64_t* rng_state = <uint64_t*> malloc(n * sizeof(uint64_t))
    cdef int8_t* in_tx = <int8_t*> malloc(n * sizeof(int8_t))
    cdef double* tx_start = <double*> malloc(n * sizeof(double))
    cdef double* tx_end = <double*> malloc(n * sizeof(double))
    cdef int8_t* ovl = <int8_t*> malloc(n * sizeof(int8_t))
    cdef int8_t* pre = <int8_t*> malloc(n * sizeof(int8_t))
    cdef int8_t* outcome = <int8_t*> malloc(n * sizeof(int8_t))
    cdef double* next_t = <double*> malloc(n * sizeof(double))
    cdef int8_t* next_kind = <int8_t*> malloc(n * sizeof(int8_t))

    cdef Buf buf
    cdef int j, j2, best, kind, node
    cdef int64_t k
    cdef double t, bt, tt, end, dt, a, kk, busy_begin, s_val
    cdef bint busy, any_ovl, hit
    cdef uint64_t state, z
    cdef cnp.ndarray out_t, out_node, out_kind, out_seq

    if (first == NULL or tick_k == NULL or seq_next == NULL or cur_seq == NULL
            or nb == NULL or be == NULL or retries == NULL or rng_state == NULL
            or in_tx == NULL or tx_start == NULL or tx_end == NULL
            or ovl == NULL or pre == NULL or outcome == NULL
            or next_t == NULL or next_kind == NULL):
        free(first); free(tick_k); free(seq_next); free(cur_seq)
        free(nb); free(be); free(retries); free(rng_state)
        free(in_tx); free(tx_start); free(tx_end); free(ovl)
        free(pre); free(outcome); free(next_t); free(next_kind)
        raise MemoryError("node state allocation failed")

    buf_init(&buf, 1024)

    try:
        for j in range(n):
            first[j] = ((<double> (j + 1)) / (<double> n)) * ipi
            tick_k[j] = 0
            seq_next[j] = 0
            cur_seq[j] = 0
            nb[j] = 0
            be[j] = 0
            retries[j] = 0
            rng_state[j] = node_seeds[j]
            in_tx[j] = 0
            tx_start[j] = 0.0
            tx_end[j] = 0.0
            ovl[j] = 0
            pre[j] = 0
            outcome[j] = 0
            tt = first[j] + 0.0 * ipi
            if tt <= duration:
                next_t[j] = tt
                next_kind[j] = TICK
            else:
                next_t[j] = INFINITY
                next_kind[j] = TICK

        while True:
            best = -1
            bt = INFINITY
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

            if kind == TICK:
                buf_push(&buf, t, node, E_GEN, seq_next[j])
                cur_seq[j] = seq_next[j]
                seq_next[j] += 1
                tick_k[j] += 1
                retries[j] = 0
                nb[j] = 0
                be[j] = min_be
                state = rng_state[j] + _GAMMA
                rng_state[j] = state
                z = _mix64(state)
                next_t[j] = t + (<double> (z & (((<uint64_t> 1) << be[j]) - 1))) * unit
                next_kind[j] = CCA

            elif kind == CCA:
                busy = 0
                if has_intf:
                    dt = t - i_start
                    if dt >= 0.0:
                        if i_off == 0.0:
                            busy = 1
                        elif fmod(dt, i_period) < i_on:
                            busy = 1
                if not busy:
                    for j2 in range(n):
                        if j2 == j:
                            continue
                        # in-progress frames, plus frames committed to start
                        # at exactly this instant (TX_START not popped yet)
                        if (in_tx[j2] and t < tx_end[j2]) or (
                            next_kind[j2] == TXSTART and next_t[j2] == t
                        ):
                            busy = 1
                            break
                if not busy:
                    next_t[j] = t + cca
                    next_kind[j] = TXSTART
                else:
                    nb[j] += 1
                    if be[j] < max_be:
                        be[j] += 1
                    if nb[j] > max_nb:
                        buf_push(&buf, t, node, E_DROP_CSMA, cur_seq[j])
                        k = tick_k[j]
                        tt = first[j] + (<double> k) * ipi
                        while tt < t:
                            k += 1
                            tt = first[j] + (<double> k) * ipi
                        tick_k[j] = k
                        if tt <= duration:
                            next_t[j] = tt
                            next_kind[j] = TICK
                        else:
                            next_t[j] = INFINITY
                    else:
                        state = rng_state[j] + _GAMMA
                        rng_state[j] = state
                        z = _mix64(state)
                        next_t[j] = t + cca + (
                            <double> (z & (((<uint64_t> 1) << be[j]) - 1))
                        ) * unit
                        next_kind[j] = CCA

            elif kind == TXSTART:
                buf_push(&buf, t, node, E_TX_START, cur_seq[j])
                end = t + frame_s
                any_ovl = 0
                for j2 in range(n):
                    if j2 != j and in_tx[j2] and t < tx_end[j2]:
                        ovl[j2] = 1
                        any_ovl = 1
                in_tx[j] = 1
                tx_start[j] = t
                tx_end[j] = end
                ovl[j] = any_ovl
                pre[j] = any_ovl  # live overlappers started no later than us
                next_t[j] = end
                next_kind[j] = TXEND

            elif kind == TXEND:
                buf_push(&buf, t, node, E_TX_END, cur_seq[j])
                in_tx[j] = 0
                hit = 0
                if has_intf:
                    s_val = tx_start[j]
                    if t > i_start:
                        a = s_val if s_val > i_start else i_start
                        if i_off == 0.0:
                            hit = 1
                        else:
                            kk = floor((a - i_start) / i_period)
                            busy_begin = i_start + kk * i_period
                            if a < busy_begin + i_on:
                                hit = 1
                            elif busy_begin + i_period < t:
                                hit = 1
                if not pre[j]:
                    if not ovl[j] and not hit:
                        outcome[j] = OUT_OK
                        buf_push(&buf, t, node, E_RX_OK, cur_seq[j])
                    else:
                        outcome[j] = OUT_ERR
                        buf_push(&buf, t, node, E_RX_ERR, cur_seq[j])
                else:
                    outcome[j] = OUT_LOST
                if ack_enabled:
                    next_t[j] = t + ack_to
                    next_kind[j] = RESOLVE
                else:
                    # fire and forget: a failed only attempt still terminates
                    # the packet, keeping the accounting identity closed
                    if outcome[j] != OUT_OK:
                        buf_push(&buf, t, node, E_DROP_RETRY, cur_seq[j])
                    k = tick_k[j]
                    tt = first[j] + (<double> k) * ipi
                    while tt < t:
                        k += 1
                        tt = first[j] + (<double> k) * ipi
                    tick_k[j] = k
                    if tt <= duration:
                        next_t[j] = tt
                        next_kind[j] = TICK
                    else:
                        next_t[j] = INFINITY

            else:  # RESOLVE
                if outcome[j] == OUT_OK:
                    k = tick_k[j]
                    tt = first[j] + (<double> k) * ipi
                    while tt < t:
                        k += 1
                        tt = first[j] + (<double> k) * ipi
                    tick_k[j] = k
                    if tt <= duration:
                        next_t[j] = tt
                        next_kind[j] = TICK
                    else:
                        next_t[j] = INFINITY
                else:
                    retries[j] += 1
                    if retries[j] > max_retries:
                        buf_push(&buf, t, node, E_DROP_RETRY, cur_seq[j])
                        k = tick_k[j]
                        tt = first[j] + (<double> k) * ipi
                        while tt < t:
                            k += 1
                            tt = first[j] + (<double> k) * ipi
                        tick_k[j] = k
                        if tt <= duration:
                            next_t[j] = tt
                            next_kind[j] = TICK
                        else:
                            next_t[j] = INFINITY
                    else:
                        nb[j] = 0
                        be[j] = min_be
                        state = rng_state[j] + _GAMMA
                        rng_state[j] = state
                        z = _mix64(state)
                        next_t[j] = t + (
                            <double> (z & (((<uint64_t> 1) << be[j]) - 1))
                        ) * unit
                        next_kind[j] = CCA

        out_t = np.empty(buf.n, dtype=np.float64)
        out_node = np.empty(buf.n, dtype=np.int32)
        out_kind = np.empty(buf.n, dtype=np.int8)
        out_seq = np.empty(buf.n, dtype=np.int32)
        if buf.n > 0:
            memcpy(cnp.PyArray_DATA(out_t), buf.t, buf.n * sizeof(double))
            memcpy(cnp.PyArray_DATA(out_node), buf.node, buf.n * sizeof(int32_t))
            memcpy(cnp.PyArray_DATA(out_kind), buf.kind, buf.n * sizeof(int8_t))
            memcpy(cnp.PyArray_DATA(out_seq), buf.seq, buf.n * sizeof(int32_t))
        return out_t, out_node, out_kind, out_seq
    finally:
        buf_free(&buf)
        free(first); free(tick_k); free(seq_next); free(cur_seq)
        free(nb); free(be); free(retries); free(rng_state)
        free(in_tx); free(tx_start); free(tx_end); free(ovl)
        free(pre); free(outcome); free(next_t); free(next_kind)
