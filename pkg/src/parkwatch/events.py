"""Occupancy event log: newline-delimited JSON state changes.

Each line records one slot transition plus the lot's availability counter
after the owning frame was fully evaluated. The first evaluated frame
emits a line per slot, so folding a complete log always reconstructs the
final per-slot states.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable

STATES = ("occupied", "vacant")

_KEYS = ("frame", "slot_id", "state", "available", "total")


@dataclass(frozen=True)
class OccupancyEvent:
    """One slot changed state at the given frame."""

    frame: int
    slot_id: int
    state: str
    available: int
    total: int

    def __post_init__(self):
        if self.state not in STATES:
            raise ValueError(f"state must be one of {STATES}, got {self.state!r}")
        if not 0 <= self.available <= self.total:
            raise ValueError(f"available {self.available} outside 0..{self.total}")


def event_line(e: OccupancyEvent) -> str:
    return json.dumps({k: getattr(e, k) for k in _KEYS}, separators=(",", ":"))


def append_event(log: IO[str], e: OccupancyEvent) -> None:
    """Write one event line and flush, so tail readers see it immediately."""
    log.write(event_line(e) + "\n")
    log.flush()


def parse_event_line(line: str) -> OccupancyEvent:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as e:
        raise ValueError(f"bad event line: {e}") from e
    if not isinstance(doc, dict) or set(doc) != set(_KEYS):
        raise ValueError(f"event line must have exactly keys {_KEYS}")
    for k in ("frame", "slot_id", "available", "total"):
        if type(doc[k]) is not int:
            raise ValueError(f"event key {k} must be an integer")
    return OccupancyEvent(**doc)


def replay_events(lines: Iterable[str]) -> tuple[dict[int, str], int, int]:
    """Fold a log into (final per-slot states, available, total).

    When the log mentions every slot, the folded states must agree with
    the last event's counter; disagreement means the log is corrupt.
    """
    states: dict[int, str] = {}
    available = total = 0
    for line in lines:
        if not line.strip():
            continue
        e = parse_event_line(line)
        states[e.slot_id] = e.state
        available, total = e.available, e.total
    if states and len(states) == total:
        vacant = sum(1 for s in states.values() if s == "vacant")
        if vacant != available:
            raise ValueError(
                f"log ends with available={available} but {vacant} slots fold to vacant")
    return states, available, total
