"""Shared fixtures: the two reference lots used across the test suite.

Lot A is the 8-slot lot (2 rows of 4); lot B is a 7-slot single row.
Both are built here by plain arithmetic, independent of the layout code
under test, so generated layouts can be checked against them.
"""

from pathlib import Path

import pytest

from parkwatch.geometry import Point2, SlotMap, SlotRegion

DATA = Path(__file__).parent / "data"


def grid_slots(rows, cols, slot_w, slot_h, gutter):
    slots = []
    for r in range(rows):
        for c in range(cols):
            x0 = gutter + c * (slot_w + gutter)
            y0 = gutter + r * (slot_h + gutter)
            x1 = x0 + slot_w - 1
            y1 = y0 + slot_h - 1
            slots.append(SlotRegion(r * cols + c + 1, (
                Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1))))
    return tuple(slots)


@pytest.fixture(scope="session")
def lot_a_slotmap():
    return SlotMap("A", 640, 480, grid_slots(2, 4, 120, 180, 20))


@pytest.fixture(scope="session")
def lot_b_slotmap():
    return SlotMap("B", 640, 480, grid_slots(1, 7, 60, 200, 20))


@pytest.fixture(scope="session")
def lot_a_slotmap_text():
    return (DATA / "lot_a_slotmap.json").read_text()
