"""Color annotation of frames: slot outlines in occupancy colors.

Vacant slots get a pure green one-pixel outline, occupied slots pure red,
on the grayscale frame promoted to RGB. The availability counter is part
of the event log, not the pixels, so display layers decide its styling.
"""

from __future__ import annotations

import numpy as np

from .frames import Frame, write_ppm
from .geometry import SlotMap, SlotRegion

VACANT_RGB = (0, 255, 0)
OCCUPIED_RGB = (255, 0, 0)


class StateMismatch(ValueError):
    """States passed for annotation do not cover every slot of the map."""


def line_pixels(a: tuple[int, int], b: tuple[int, int]) -> set[tuple[int, int]]:
    """Integer segment rasterization, endpoints included.

    Endpoints are canonicalized before walking so a-b and b-a paint the
    same pixels.
    """
    (x0, y0), (x1, y1) = sorted((a, b))
    dx = abs(x1 - x0)
    dy = abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx - dy
    pts = set()
    x, y = x0, y0
    while True:
        pts.add((x, y))
        if (x, y) == (x1, y1):
            return pts
        e2 = 2 * err
        if e2 > -dy:
            err -= dy
            x += sx
        if e2 < dx:
            err += dx
            y += sy


def outline_pixels(slot: SlotRegion) -> set[tuple[int, int]]:
    """The one-pixel outline of a slot quad: its four edges."""
    pts = [(p.x, p.y) for p in slot.points]
    out: set[tuple[int, int]] = set()
    for i in range(4):
        out |= line_pixels(pts[i], pts[(i + 1) % 4])
    return out


def write_annotated(frame: Frame, slot_map: SlotMap, states: dict[int, str],
                    counter: tuple[int, int]) -> bytes:
    """Render the frame as a PPM with colored slot outlines.

    counter is accepted for interface symmetry with the event log and does
    not influence the pixels.
    """
    missing = [s.slot_id for s in slot_map.slots if s.slot_id not in states]
    if missing:
        raise StateMismatch(f"no state for slots {missing}")
    rgb = np.repeat(frame.pixels[:, :, None], 3, axis=2)
    for slot in slot_map.slots:
        color = OCCUPIED_RGB if states[slot.slot_id] == "occupied" else VACANT_RGB
        for x, y in outline_pixels(slot):
            if 0 <= x < frame.width and 0 <= y < frame.height:
                rgb[y, x] = color
    return write_ppm(rgb)
