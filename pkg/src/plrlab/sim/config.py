"""Simulation configuration types and their JSON mirror."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

from ..errors import ConfigError

_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class CsmaParams:
    """Unslotted CSMA/CA constants; defaults follow the common 802.15.4 profile."""

    min_be: int = 3
    max_be: int = 5
    max_csma_backoffs: int = 4
    max_frame_retries: int = 3
    unit_backoff_s: float = 320e-6
    cca_s: float = 128e-6
    bitrate_bps: float = 250000.0
    ack_enabled: bool = True
    ack_timeout_s: float = 864e-6

    def validate(self) -> None:
        if not 0 <= self.min_be <= self.max_be <= 16:
            raise ConfigError(f"need 0 <= min_be <= max_be <= 16, got {self.min_be}..{self.max_be}")
        if self.max_csma_backoffs < 0 or self.max_frame_retries < 0:
            raise ConfigError("backoff/retry limits must be non-negative")
        for name in ("unit_backoff_s", "cca_s", "bitrate_bps", "ack_timeout_s"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class InterferencePattern:
    """Periodic jammer: carrier for on_s seconds, idle for off_s, repeating from start_s."""

    on_s: float = 0.002
    off_s: float = 0.008
    start_s: float = 0.0

    def validate(self) -> None:
        if self.on_s <= 0:
            raise ConfigError(f"interference on_s must be positive, got {self.on_s}")
        if self.off_s < 0 or self.start_s < 0:
            raise ConfigError("interference off_s/start_s must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    """One simulation run: star topology, node 0 is the sink, 1..n transmit."""

    num_transmitters: int
    traffic_ipi_s: float
    duration_s: float
    payload_bytes: int = 100
    interference: Optional[InterferencePattern] = None
    seed: int = 0
    mac_params: CsmaParams = field(default_factory=CsmaParams)

    def validate(self) -> None:
        if self.num_transmitters < 1:
            raise ConfigError(f"num_transmitters must be >= 1, got {self.num_transmitters}")
        if self.traffic_ipi_s <= 0:
            raise ConfigError(f"traffic_ipi_s must be positive, got {self.traffic_ipi_s}")
        if self.duration_s <= 0:
            raise ConfigError(f"duration_s must be positive, got {self.duration_s}")
        if self.payload_bytes < 1:
            raise ConfigError(f"payload_bytes must be >= 1, got {self.payload_bytes}")
        if not 0 <= self.seed <= _MAX_SEED:
            raise ConfigError("seed must fit in 64 unsigned bits")
        self.mac_params.validate()
        if self.interference is not None:
            self.interference.validate()

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        return d

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "SimConfig":
        try:
            mac = CsmaParams(**d.get("mac_params") or {})
            intf = d.get("interference")
            pattern = InterferencePattern(**intf) if intf is not None else None
            cfg = SimConfig(
                num_transmitters=d["num_transmitters"],
                traffic_ipi_s=d["traffic_ipi_s"],
                duration_s=d["duration_s"],
                payload_bytes=d.get("payload_bytes", 100),
                interference=pattern,
                seed=d.get("seed", 0),
                mac_params=mac,
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed simulation config: {exc}") from exc
        cfg.validate()
        return cfg


def load_config_json(path: str) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return SimConfig.from_dict(data)


def dump_config_json(config: SimConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
