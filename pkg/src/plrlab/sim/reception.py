"""Frame reception outcome at the sink.

Capture model: the sink locks onto the earliest-starting frame among any set
of overlapping transmissions (ties go to the lower node id). A captured frame
decodes cleanly only if nothing else overlapped it and no jammer burst touched
it; otherwise the sink logs it as erroneous. Frames the sink never locked onto
produce no reception record at all.
"""

from __future__ import annotations

from typing import Iterable

RX_OK = "RX_OK"
RX_ERR = "RX_ERR"
NOT_RECEIVED = "NOT_RECEIVED"


def resolve_reception(
    start_s: float,
    node_id: int,
    overlapping: Iterable[tuple[float, int]],
    interference_hit: bool,
) -> str:
    """Classify one transmission given the (start, node) pairs overlapping it."""
    overlapped = False
    for other_start, other_node in overlapping:
        if other_start < start_s or (other_start == start_s and other_node < node_id):
            return NOT_RECEIVED
        overlapped = True
    if overlapped or interference_hit:
        return RX_ERR
    return RX_OK
