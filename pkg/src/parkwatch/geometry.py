"""Marked parking-slot regions and their pixel rasterization.

A slot map is the artifact produced by the manual marking step: one
quadrilateral per slot, addressed by pixel coordinates of the lot camera
image. Vertices live on the pixel grid, so containment is exact integer
arithmetic: a pixel belongs to a slot iff its grid point lies inside or on
the boundary of the quad (crossing-number rule, boundary inclusive).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

MIN_REGION_PIXELS = 16
MAX_OVERLAP_FRACTION = 0.05

_MAP_KEYS = ("lot_id", "image_width", "image_height", "slots")
_SLOT_KEYS = ("slot_id", "points")


class MalformedDocument(ValueError):
    """Document is not JSON or does not match its schema."""


class InvariantViolation(ValueError):
    """Structurally valid value that violates a domain invariant."""


class EmptyRegion(ValueError):
    """Region rasterizes to fewer pixels than intensity statistics need."""


@dataclass(frozen=True)
class Point2:
    """Pixel coordinate: x is the column, y the row."""

    x: int
    y: int

    def __post_init__(self):
        if type(self.x) is not int or type(self.y) is not int:
            raise MalformedDocument(f"point coordinates must be integers, got {self!r}")
        if self.x < 0 or self.y < 0:
            raise InvariantViolation(f"negative point coordinate ({self.x},{self.y})")


@dataclass(frozen=True)
class SlotRegion:
    """One marked slot: a closed 4-vertex figure."""

    slot_id: int
    points: tuple[Point2, Point2, Point2, Point2]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if type(self.slot_id) is not int or self.slot_id < 1:
            raise InvariantViolation(f"slot_id must be a positive integer, got {self.slot_id!r}")
        if len(self.points) != 4:
            raise InvariantViolation(
                f"slot {self.slot_id} has {len(self.points)} points, a slot needs exactly 4")


@dataclass(frozen=True)
class SlotMap:
    """All marked slots of one lot, with the image bounds they were marked on."""

    lot_id: str
    image_width: int
    image_height: int
    slots: tuple[SlotRegion, ...]

    def __post_init__(self):
        # store slots sorted by id so equal maps compare equal regardless of input order
        object.__setattr__(self, "slots", tuple(sorted(self.slots, key=lambda s: s.slot_id)))
        if not isinstance(self.lot_id, str):
            raise MalformedDocument("lot_id must be a string")
        for name in ("image_width", "image_height"):
            v = getattr(self, name)
            if type(v) is not int or v < 1:
                raise MalformedDocument(f"{name} must be a positive integer")

    def rasterize(self) -> dict[int, frozenset[tuple[int, int]]]:
        """Pixel set of every slot, keyed by slot_id."""
        return {s.slot_id: rasterize_region(s, self.image_width, self.image_height)
                for s in self.slots}

    def validate(self) -> dict[int, frozenset[tuple[int, int]]]:
        """Check every invariant; returns the rasterization so callers can reuse it."""
        ids = [s.slot_id for s in self.slots]
        if len(set(ids)) != len(ids):
            raise InvariantViolation("duplicate slot_id")
        if ids != list(range(1, len(ids) + 1)):
            raise InvariantViolation(f"slot ids must be contiguous from 1, got {ids}")
        for slot in self.slots:
            for p in slot.points:
                if p.x >= self.image_width or p.y >= self.image_height:
                    raise InvariantViolation(
                        f"slot {slot.slot_id} point ({p.x},{p.y}) outside "
                        f"{self.image_width}x{self.image_height} image")
            _check_simple(slot)
        pixels = {}
        for slot in self.slots:
            try:
                pixels[slot.slot_id] = rasterize_region(slot, self.image_width, self.image_height)
            except EmptyRegion as e:
                raise InvariantViolation(f"slot {slot.slot_id}: {e}") from e
        for i, a in enumerate(self.slots):
            for b in self.slots[i + 1:]:
                inter = len(pixels[a.slot_id] & pixels[b.slot_id])
                smaller = min(len(pixels[a.slot_id]), len(pixels[b.slot_id]))
                if inter > MAX_OVERLAP_FRACTION * smaller:
                    raise InvariantViolation(
                        f"slots {a.slot_id} and {b.slot_id} overlap by {inter} pixels "
                        f"(more than {MAX_OVERLAP_FRACTION:.0%} of the smaller region)")
        return pixels


def point_in_quad(p: Point2, q: SlotRegion) -> bool:
    """Boundary-inclusive containment of a pixel in a slot quad.

    Crossing-number rule on integer coordinates; a point exactly on an edge
    or vertex counts as inside, so slot membership never depends on
    floating-point rounding.
    """
    px, py = p.x, p.y
    pts = q.points
    inside = False
    for i in range(4):
        ax, ay = pts[i].x, pts[i].y
        bx, by = pts[(i + 1) % 4].x, pts[(i + 1) % 4].y
        cross = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
        if (cross == 0
                and min(ax, bx) <= px <= max(ax, bx)
                and min(ay, by) <= py <= max(ay, by)):
            return True
        if (ay > py) != (by > py) and (cross > 0) == (by > ay):
            inside = not inside
    return inside


def rasterize_region(q: SlotRegion, width: int, height: int) -> frozenset[tuple[int, int]]:
    """All pixels whose grid points the quad contains, clipped to the image.

    Vectorized form of point_in_quad over the quad's bounding box; the two
    agree pixel for pixel. Raises EmptyRegion below MIN_REGION_PIXELS.
    """
    xs = [p.x for p in q.points]
    ys = [p.y for p in q.points]
    x0, x1 = max(min(xs), 0), min(max(xs), width - 1)
    y0, y1 = max(min(ys), 0), min(max(ys), height - 1)
    if x0 > x1 or y0 > y1:
        raise EmptyRegion("region lies outside the image")
    gx = np.arange(x0, x1 + 1, dtype=np.int64)[None, :]
    gy = np.arange(y0, y1 + 1, dtype=np.int64)[:, None]
    inside = np.zeros((y1 - y0 + 1, x1 - x0 + 1), dtype=bool)
    boundary = np.zeros_like(inside)
    for i in range(4):
        ax, ay = q.points[i].x, q.points[i].y
        bx, by = q.points[(i + 1) % 4].x, q.points[(i + 1) % 4].y
        cross = (bx - ax) * (gy - ay) - (gx - ax) * (by - ay)
        boundary |= ((cross == 0)
                     & (gx >= min(ax, bx)) & (gx <= max(ax, bx))
                     & (gy >= min(ay, by)) & (gy <= max(ay, by)))
        inside ^= ((ay > gy) != (by > gy)) & ((cross > 0) == (by > ay))
    rows, cols = np.nonzero(inside | boundary)
    pixels = frozenset(zip((cols + x0).tolist(), (rows + y0).tolist()))
    if len(pixels) < MIN_REGION_PIXELS:
        raise EmptyRegion(
            f"region covers {len(pixels)} pixels, need at least {MIN_REGION_PIXELS}")
    return pixels


def parse_slot_map(text: str) -> SlotMap:
    """Parse and fully validate a slot-map JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"not a JSON document: {e}") from e
    if not isinstance(doc, dict):
        raise MalformedDocument("top-level value must be an object")
    _require_keys(doc, _MAP_KEYS, "slot map")
    if not isinstance(doc["slots"], list):
        raise MalformedDocument("slots must be a list")
    slots = []
    for entry in doc["slots"]:
        if not isinstance(entry, dict):
            raise MalformedDocument("each slot must be an object")
        _require_keys(entry, _SLOT_KEYS, "slot")
        pts = entry["points"]
        if not isinstance(pts, list) or any(
                not isinstance(p, list) or len(p) != 2 for p in pts):
            raise MalformedDocument("points must be a list of [x,y] pairs")
        slots.append(SlotRegion(entry["slot_id"], tuple(Point2(x, y) for x, y in pts)))
    m = SlotMap(doc["lot_id"], doc["image_width"], doc["image_height"], tuple(slots))
    m.validate()
    return m


def serialize_slot_map(m: SlotMap) -> str:
    """Canonical slot-map document: fixed key order, slots sorted, no whitespace."""
    doc = {
        "lot_id": m.lot_id,
        "image_width": m.image_width,
        "image_height": m.image_height,
        "slots": [
            {"slot_id": s.slot_id, "points": [[p.x, p.y] for p in s.points]}
            for s in sorted(m.slots, key=lambda s: s.slot_id)
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


def _require_keys(obj: dict, keys: tuple[str, ...], what: str) -> None:
    for k in keys:
        if k not in obj:
            raise MalformedDocument(f"{what} is missing required key {k!r}")
    unknown = set(obj) - set(keys)
    if unknown:
        raise MalformedDocument(f"{what} has unknown keys: {sorted(unknown)}")


def _check_simple(slot: SlotRegion) -> None:
    pts = [(p.x, p.y) for p in slot.points]
    if len(set(pts)) != 4:
        raise InvariantViolation(f"slot {slot.slot_id} repeats a vertex")
    # a 4-gon self-intersects iff a pair of opposite edges meets
    for (i, j), (k, l) in (((0, 1), (2, 3)), ((1, 2), (3, 0))):
        if _segments_meet(pts[i], pts[j], pts[k], pts[l]):
            raise InvariantViolation(f"slot {slot.slot_id} outline is self-intersecting")


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _within(a, b, c):
    return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))


def _segments_meet(p1, p2, q1, q2) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0
            and (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0):
        return True
    return ((d1 == 0 and _within(q1, q2, p1))
            or (d2 == 0 and _within(q1, q2, p2))
            or (d3 == 0 and _within(p1, p2, q1))
            or (d4 == 0 and _within(p1, p2, q2)))
