"""Seeded splitmix64 streams for reproducible simulations.

The engine draws nothing but CSMA backoffs, one stream per transmitter, so a
run is reproducible from the config seed alone and independent of event
interleaving. splitmix64 is used because it is trivial to replicate
word-for-word in the compiled kernel (uint64 wraparound arithmetic only).
"""

from __future__ import annotations

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer: avalanche a 64-bit word."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *parts: int) -> int:
    """Derive an independent 64-bit seed from a master seed and integer labels.

    Used for per-node engine streams, per-grid-point corpus seeds, and
    per-(fold, grid) training seeds. Same inputs, same output, on any platform.
    """
    s = master & _MASK64
    for p in parts:
        s = mix64((s + _GAMMA) ^ ((p * _MIX1) & _MASK64))
    return mix64(s)


class Splitmix64:
    """Minimal deterministic generator; one instance per transmitter node."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        return mix64(self.state)

    def next_below_pow2(self, exponent: int) -> int:
        """Uniform draw from {0, ..., 2**exponent - 1}; always consumes one word."""
        return self.next_u64() & ((1 << exponent) - 1)


def backoff_delay(be: int, rng: Splitmix64, unit_backoff_s: float) -> float:
    """One CSMA backoff: u * unit_backoff_s with u uniform in {0 .. 2**be - 1}.

    Consumes exactly one word of `rng` even for be=0 (where the delay is
    always zero), keeping stream positions independent of the BE sequence.
    """
    if not 0 <= be <= 32:
        raise ValueError(f"backoff exponent {be} out of range [0, 32]")
    return rng.next_below_pow2(be) * unit_backoff_s
