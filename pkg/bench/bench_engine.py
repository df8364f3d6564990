"""Benchmark the Cython simulation kernel against its pure-Python twin.

Runs the same seeded configs through both backends, checks the traces are
bit-identical, and reports events/second plus the speedup. Usage:

    python3 bench/bench_engine.py [--duration 30] [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

from plrlab.sim import InterferencePattern, SimConfig, simulate
from plrlab.sim.engine import available_backends
from plrlab.sim.trace import trace_to_csv_bytes


def scenario_grid(duration_s: float) -> list[tuple[str, SimConfig]]:
    jam = InterferencePattern(on_s=0.002, off_s=0.008)
    return [
        ("light (2n, ipi 1.0)", SimConfig(num_transmitters=2, traffic_ipi_s=1.0,
                                          duration_s=duration_s, seed=1)),
        ("busy (16n, ipi 0.125)", SimConfig(num_transmitters=16, traffic_ipi_s=0.125,
                                            duration_s=duration_s, seed=2)),
        ("saturated (28n, ipi 0.015625)", SimConfig(num_transmitters=28,
                                                    traffic_ipi_s=0.015625,
                                                    duration_s=duration_s, seed=3)),
        ("jammed (8n, ipi 0.25)", SimConfig(num_transmitters=8, traffic_ipi_s=0.25,
                                            duration_s=duration_s, seed=4,
                                            interference=jam)),
    ]


def time_backend(config: SimConfig, backend: str, repeats: int) -> tuple[float, int]:
    # min over repeats: noise only ever slows a run down
    best = float("inf")
    num_events = 0
    for _ in range(repeats):
        t0 = time.perf_counter()
        trace = simulate(config, backend=backend)
        best = min(best, time.perf_counter() - t0)
        num_events = len(trace.time_s)
    return best, num_events


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--duration", type=float, default=30.0,
                    help="simulated seconds per scenario (default 30)")
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repeats, min is reported (default 3)")
    args = ap.parse_args()

    backends = available_backends()
    if "cython" not in backends:
        print("cython extension not built; timing python backend only")

    header = f"{'scenario':32s} {'events':>9s}"
    for b in backends:
        header += f" {b + ' ev/s':>14s}"
    if len(backends) == 2:
        header += f" {'speedup':>8s}"
    print(header)

    for label, config in scenario_grid(args.duration):
        times = {}
        events = {}
        for b in backends:
            times[b], events[b] = time_backend(config, b, args.repeats)
        if len(backends) == 2:
            a = trace_to_csv_bytes(simulate(config, backend="cython"))
            bjt = trace_to_csv_bytes(simulate(config, backend="python"))
            if a != bjt:
                print(f"MISMATCH: backends disagree on {label}")
                return 1
        n = events[backends[0]]
        line = f"{label:32s} {n:9d}"
        for b in backends:
            line += f" {n / times[b]:14.0f}"
        if len(backends) == 2:
            line += f" {times['python'] / times['cython']:7.1f}x"
        print(line)

    if len(backends) == 2:
        print("all traces bit-identical across backends")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
