"""Closed-loop MAC reconfiguration driven by predicted packet loss.

Each observation window is turned into a plr prediction; a two-threshold
hysteresis state machine then decides whether to keep the current MAC or
switch. `decide` is pure (state in, state out), which is what makes replay
logs byte-identical and the dwell/no-chatter properties checkable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .errors import ConfigError, SchemaError
from .features import FeatureVector, Sample
from .ioutil import atomic_write_bytes
from .models import predict

ACTION_KEEP = "KEEP"
ACTION_SWITCH = "SWITCH"

DECISION_LOG_HEADER = "window_start_s,predicted_plr,action,target,current_protocol"


@dataclass(frozen=True)
class ControllerPolicy:
    switch_up_threshold: float = 0.2
    switch_down_threshold: float = 0.1
    min_dwell_windows: int = 2
    target_protocol: str = "TSCH"

    def validate(self) -> None:
        if not 0.0 < self.switch_up_threshold <= 1.0:
            raise ConfigError(
                f"switch_up_threshold must be in (0,1], got {self.switch_up_threshold}"
            )
        if not 0.0 <= self.switch_down_threshold < 1.0:
            raise ConfigError(
                "switch_down_threshold must be in [0,1), "
                f"got {self.switch_down_threshold}"
            )
        if self.switch_down_threshold >= self.switch_up_threshold:
            raise ConfigError("switch_down_threshold must be < switch_up_threshold")
        if self.min_dwell_windows < 1:
            raise ConfigError(
                f"min_dwell_windows must be >= 1, got {self.min_dwell_windows}"
            )


@dataclass(frozen=True)
class ControllerState:
    """current_protocol is the active MAC; streak counts consecutive windows
    satisfying the pending transition's condition."""

    current_protocol: str = "CSMA"
    baseline_protocol: str = "CSMA"
    streak: int = 0


@dataclass(frozen=True)
class MacDecision:
    window_start_s: float
    predicted_plr: float
    action: str  # KEEP or SWITCH
    target: str  # switch destination; empty for KEEP
    current_protocol: str  # protocol in force after the decision


def observe(model, features: FeatureVector) -> float:
    """Predicted plr for one window; exactly models.predict."""
    return predict(model, features)


def decide(
    predicted_plr: float, policy: ControllerPolicy, state: ControllerState
):
    """One hysteresis step. Returns (MacDecision stub, next state).

    In the baseline protocol a switch fires after min_dwell_windows
    consecutive windows with predicted plr above switch_up_threshold; in the
    target protocol, after the same count below switch_down_threshold.
    The caller stamps the window time onto the returned decision.
    """
    policy.validate()
    in_target = state.current_protocol == policy.target_protocol
    if in_target:
        qualifying = predicted_plr < policy.switch_down_threshold
        destination = state.baseline_protocol
    else:
        qualifying = predicted_plr > policy.switch_up_threshold
        destination = policy.target_protocol

    streak = state.streak + 1 if qualifying else 0
    if streak >= policy.min_dwell_windows:
        next_state = replace(state, current_protocol=destination, streak=0)
        decision = MacDecision(
            window_start_s=0.0,
            predicted_plr=predicted_plr,
            action=ACTION_SWITCH,
            target=destination,
            current_protocol=destination,
        )
    else:
        next_state = replace(state, streak=streak)
        decision = MacDecision(
            window_start_s=0.0,
            predicted_plr=predicted_plr,
            action=ACTION_KEEP,
            target="",
            current_protocol=state.current_protocol,
        )
    return decision, next_state


def run_loop(
    window_stream: Iterable,
    model,
    policy: Optional[ControllerPolicy] = None,
    state: Optional[ControllerState] = None,
) -> list:
    """Consume windows in order, emit one MacDecision each.

    The stream yields Samples (replay, window_start_s known) or bare
    FeatureVectors (start defaults to the running index). A mid-stream
    exception stops the loop; decisions made so far are returned intact.
    """
    policy = policy if policy is not None else ControllerPolicy()
    policy.validate()
    state = state if state is not None else ControllerState()
    log: list = []
    stream = iter(window_stream)
    index = 0
    while True:
        try:
            item = next(stream)
        except StopIteration:
            break
        except Exception:
            return log  # partial log preserved
        if isinstance(item, Sample):
            fv, start = item.features, float(item.window_start_s)
        else:
            fv, start = item, float(index)
        predicted = observe(model, fv)
        decision, state = decide(predicted, policy, state)
        log.append(replace(decision, window_start_s=start))
        index += 1
    return log


# ------------------------------------------------------------ decision log


def decision_log_to_csv_bytes(log) -> bytes:
    buf = io.StringIO()
    buf.write(DECISION_LOG_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    for d in log:
        w.writerow(
            [
                f"{d.window_start_s:.6f}",
                f"{d.predicted_plr:.6f}",
                d.action,
                d.target,
                d.current_protocol,
            ]
        )
    return buf.getvalue().encode("utf-8")


def write_decision_log(log, path) -> None:
    atomic_write_bytes(path, decision_log_to_csv_bytes(log))


def load_decision_log(path) -> list:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty decision log", field_path=str(path)) from None
        if header != DECISION_LOG_HEADER.split(","):
            raise SchemaError(
                f"bad decision log header {header!r}", field_path=f"{path}:1"
            )
        log = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5 or row[2] not in (ACTION_KEEP, ACTION_SWITCH):
                raise SchemaError(
                    f"bad decision row {row!r}", field_path=f"{path}:{lineno}"
                )
            try:
                log.append(
                    MacDecision(
                        window_start_s=float(row[0]),
                        predicted_plr=float(row[1]),
                        action=row[2],
                        target=row[3],
                        current_protocol=row[4],
                    )
                )
            except ValueError as exc:
                raise SchemaError(
                    f"bad decision row {row!r}: {exc}", field_path=f"{path}:{lineno}"
                ) from None
        return log
