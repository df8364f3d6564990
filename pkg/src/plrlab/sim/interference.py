"""Periodic-jammer timing arithmetic.

All three functions agree on the same half-open busy intervals
[start + k*(on+off), start + k*(on+off) + on). The compiled engine replicates
`interference_busy_at` and `interference_overlaps` operation-for-operation, so
edits here must be mirrored in `_engine_cy.pyx`.
"""

from __future__ import annotations

import math

from .config import InterferencePattern


def interference_schedule(
    pattern: InterferencePattern, duration_s: float
) -> list[tuple[float, float]]:
    """Materialize busy intervals, sorted, disjoint, clipped to [0, duration_s)."""
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    pattern.validate()
    if pattern.start_s >= duration_s:
        return []
    if pattern.off_s == 0.0:
        # Adjacent busy periods merge into continuous jamming.
        return [(pattern.start_s, duration_s)]
    period = pattern.on_s + pattern.off_s
    out = []
    k = 0
    while True:
        begin = pattern.start_s + k * period
        if begin >= duration_s:
            break
        out.append((begin, min(begin + pattern.on_s, duration_s)))
        k += 1
    return out


def interference_busy_at(pattern: InterferencePattern | None, t: float) -> bool:
    """Is the jammer transmitting at instant t?"""
    if pattern is None:
        return False
    dt = t - pattern.start_s
    if dt < 0.0:
        return False
    if pattern.off_s == 0.0:
        return True
    return math.fmod(dt, pattern.on_s + pattern.off_s) < pattern.on_s


def interference_overlaps(pattern: InterferencePattern | None, start: float, end: float) -> bool:
    """Does any busy interval intersect the half-open interval [start, end)?"""
    if pattern is None:
        return False
    if end <= pattern.start_s:
        return False
    a = start if start > pattern.start_s else pattern.start_s
    if pattern.off_s == 0.0:
        return True
    period = pattern.on_s + pattern.off_s
    k = math.floor((a - pattern.start_s) / period)
    busy_begin = pattern.start_s + k * period
    if a < busy_begin + pattern.on_s:
        return True
    return busy_begin + period < end
