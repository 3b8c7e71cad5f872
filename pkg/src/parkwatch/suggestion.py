"""Block suggestions from the class schedule and live availability.

All wall-clock reasoning happens in a fixed Eastern offset (UTC-05:00,
no daylight saving): a class is relevant when it runs today and either
starts within the lookahead window or is already in session.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from .detection import LotStatus
from .store import DAY_ORDER, ClassEntry, Store

EASTERN = timezone(timedelta(hours=-5), "EST")
DEFAULT_LOOKAHEAD_MINUTES = 120

REASONS = ("upcoming_class", "no_upcoming_class_max_availability",
           "home_block_full_fallback", "no_availability")


@dataclass(frozen=True)
class Suggestion:
    block_id: str | None
    reason: str
    class_id: str | None
    available: int
    total: int

    def __post_init__(self):
        if self.reason not in REASONS:
            raise ValueError(f"reason must be one of {REASONS}")
        if (self.block_id is None) != (self.reason == "no_availability"):
            raise ValueError("block_id must be absent exactly for no_availability")
        if self.block_id is not None and self.available < 1:
            raise ValueError("a suggested block must have availability")


def next_relevant_class(schedule: list[ClassEntry], now: datetime,
                        lookahead: int = DEFAULT_LOOKAHEAD_MINUTES
                        ) -> ClassEntry | None:
    """Today's enrolled class that starts soonest, if any qualifies.

    Qualifying: meets today and either starts in [now, now+lookahead]
    or is in session (start <= now < end). Equal start times resolve by
    class_id so identical timings always give the same answer.
    """
    local = now.astimezone(EASTERN)
    today = DAY_ORDER[local.weekday()]
    minute = local.hour * 60 + local.minute
    candidates = [
        c for c in schedule
        if today in c.days
        and (minute <= c.start_time <= minute + lookahead
             or c.start_time <= minute < c.end_time)
    ]
    if not candidates:
        return None
    return min(candidates, key=lambda c: (c.start_time, c.class_id))


def _best_block(statuses: dict[str, LotStatus], exclude: str | None = None
                ) -> tuple[str, LotStatus] | None:
    open_blocks = [(b, s) for b, s in statuses.items()
                   if b != exclude and s.available >= 1]
    if not open_blocks:
        return None
    return min(open_blocks, key=lambda bs: (-bs[1].available, bs[0]))


def suggest_from_schedule(schedule: list[ClassEntry],
                          statuses: dict[str, LotStatus], now: datetime,
                          lookahead: int = DEFAULT_LOOKAHEAD_MINUTES) -> Suggestion:
    """Pure rule evaluation; see suggest for the store-backed entry point.

    A home block missing from statuses counts as having no availability.
    """
    cls = next_relevant_class(schedule, now, lookahead)
    if cls is not None:
        home = statuses.get(cls.home_block)
        if home is not None and home.available >= 1:
            return Suggestion(cls.home_block, "upcoming_class", cls.class_id,
                              home.available, home.total)
        fallback = _best_block(statuses, exclude=cls.home_block)
        if fallback is not None:
            block, status = fallback
            return Suggestion(block, "home_block_full_fallback", cls.class_id,
                              status.available, status.total)
        return Suggestion(None, "no_availability", None, 0, 0)
    best = _best_block(statuses)
    if best is not None:
        block, status = best
        return Suggestion(block, "no_upcoming_class_max_availability", None,
                          status.available, status.total)
    return Suggestion(None, "no_availability", None, 0, 0)


def suggest(store: Store, username: str, statuses: dict[str, LotStatus],
            now: datetime, lookahead: int = DEFAULT_LOOKAHEAD_MINUTES) -> Suggestion:
    """Suggestion for a user from their enrolled classes and block statuses."""
    schedule = [store.classes[cid] for cid in store.enrolled_classes(username)]
    return suggest_from_schedule(schedule, statuses, now, lookahead)
