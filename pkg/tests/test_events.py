"""Event log format and replay tests."""

import io
import json

import pytest

from parkwatch.events import (
    OccupancyEvent,
    append_event,
    event_line,
    parse_event_line,
    replay_events,
)


def test_line_matches_documented_form():
    e = OccupancyEvent(frame=12, slot_id=3, state="vacant", available=6, total=8)
    assert event_line(e) == '{"frame":12,"slot_id":3,"state":"vacant","available":6,"total":8}'


def test_append_writes_one_flushed_line():
    buf = io.StringIO()
    append_event(buf, OccupancyEvent(0, 1, "occupied", 7, 8))
    append_event(buf, OccupancyEvent(4, 2, "vacant", 8, 8))
    lines = buf.getvalue().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0]) == {
        "frame": 0, "slot_id": 1, "state": "occupied", "available": 7, "total": 8}


def test_parse_round_trip():
    e = OccupancyEvent(40, 5, "occupied", 2, 8)
    assert parse_event_line(event_line(e)) == e


def test_parse_rejects_unknown_state():
    line = '{"frame":1,"slot_id":1,"state":"gone","available":0,"total":1}'
    with pytest.raises(ValueError):
        parse_event_line(line)


def test_parse_rejects_extra_keys():
    line = '{"frame":1,"slot_id":1,"state":"vacant","available":1,"total":1,"x":0}'
    with pytest.raises(ValueError):
        parse_event_line(line)


def test_replay_folds_to_final_states():
    lines = [
        '{"frame":0,"slot_id":1,"state":"occupied","available":1,"total":2}',
        '{"frame":0,"slot_id":2,"state":"vacant","available":1,"total":2}',
        '{"frame":9,"slot_id":1,"state":"vacant","available":2,"total":2}',
    ]
    states, available, total = replay_events(lines)
    assert states == {1: "vacant", 2: "vacant"}
    assert (available, total) == (2, 2)


def test_replay_checks_counter_consistency():
    lines = ['{"frame":0,"slot_id":1,"state":"vacant","available":0,"total":1}']
    with pytest.raises(ValueError):
        replay_events(lines)


def test_replay_empty_log():
    states, available, total = replay_events([])
    assert states == {}
    assert (available, total) == (0, 0)
