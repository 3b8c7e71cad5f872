"""Synthetic lot rendering with exact ground truth.

Stands in for a camera pointed at a real lot: a script says when cars
arrive and depart, the renderer draws them as flat rectangles over a
uniform background, and per-pixel noise comes from a 64-bit linear
congruential generator so every frame is reproducible from (script, seed)
alone, in any implementation language.

The recurrence is state' = 6364136223846793005 * state + 1442695040888963407
(mod 2^64); a sample is (state' >> 33) % (2*amplitude + 1) - amplitude.
Frame i draws from an independent stream seeded seed + (i+1) * golden
ratio increment; the reference frame uses stream key 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detection import DetectionReport
from .frames import DimensionMismatch, Frame, FrameSequence, open_sequence, write_pgm
from .geometry import InvariantViolation, MalformedDocument, Point2, SlotMap, SlotRegion

LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
STREAM_KEY_STEP = 0x9E3779B97F4A7C15

_GRID_KEYS = ("rows", "cols", "slot_w", "slot_h", "gutter")
_SCRIPT_KEYS = ("lot_id", "width", "height", "grid", "background_intensity",
                "noise_amplitude", "total_frames", "events")
_EVENT_KEYS = ("frame", "slot_id", "action", "car_intensity")


class LayoutOverflow(ValueError):
    """Grid of slots does not fit in the scripted image dimensions."""


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    slot_w: int
    slot_h: int
    gutter: int

    def __post_init__(self):
        for name in ("rows", "cols", "slot_w", "slot_h"):
            if getattr(self, name) < 1:
                raise InvariantViolation(f"grid {name} must be >= 1")
        if self.gutter < 0:
            raise InvariantViolation("grid gutter must be >= 0")


@dataclass(frozen=True)
class ScriptEvent:
    frame: int
    slot_id: int
    action: str
    car_intensity: int = 40

    def __post_init__(self):
        if self.action not in ("arrive", "depart"):
            raise InvariantViolation(f"unknown action {self.action!r}")
        if not 0 <= self.car_intensity <= 255:
            raise InvariantViolation("car_intensity must be in 0..255")


@dataclass(frozen=True)
class LotScript:
    """Declarative description of one simulated recording."""

    lot_id: str
    width: int
    height: int
    grid: GridSpec
    total_frames: int
    events: tuple[ScriptEvent, ...] = ()
    background_intensity: int = 120
    noise_amplitude: int = 3

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.total_frames < 1:
            raise InvariantViolation("total_frames must be >= 1")
        if not 0 <= self.background_intensity <= 255:
            raise InvariantViolation("background_intensity must be in 0..255")
        if self.noise_amplitude < 0:
            raise InvariantViolation("noise_amplitude must be >= 0")
        slot_count = self.grid.rows * self.grid.cols
        last_frame = -1
        expect_arrive: dict[int, bool] = {}
        for e in self.events:
            if e.frame < last_frame:
                raise InvariantViolation("events must be ordered by frame")
            last_frame = e.frame
            if not 0 <= e.frame < self.total_frames:
                raise InvariantViolation(
                    f"event frame {e.frame} outside 0..{self.total_frames - 1}")
            if not 1 <= e.slot_id <= slot_count:
                raise InvariantViolation(
                    f"event slot {e.slot_id} outside 1..{slot_count}")
            arriving = e.action == "arrive"
            if expect_arrive.get(e.slot_id, True) != arriving:
                raise InvariantViolation(
                    f"slot {e.slot_id} events must alternate arrive/depart, "
                    f"starting with arrive")
            expect_arrive[e.slot_id] = not arriving


@dataclass(frozen=True)
class GroundTruth:
    """occupancy[frame, slot_index] is True when slot_index+1 holds a car."""

    occupancy: np.ndarray

    def __post_init__(self):
        if self.occupancy.ndim != 2 or self.occupancy.dtype != bool:
            raise InvariantViolation("occupancy must be a 2-D boolean matrix")


@dataclass(frozen=True)
class ScoreSummary:
    overall: float
    per_slot: dict[int, float]
    lags: list[tuple[int, int, str, int | None]] = field(default_factory=list)


def stream_seed(seed: int, key: int) -> int:
    """Seed of sub-stream `key`; key 0 is the reference frame, i+1 frame i."""
    return (seed + key * STREAM_KEY_STEP) % (1 << 64)


def noise_stream(seed: int, count: int, amplitude: int) -> np.ndarray:
    """First `count` noise samples of the stream, in [-amplitude, amplitude].

    Closed form of the congruential recurrence: state_k is computed from
    cumulative products and sums in uint64, which wraps modulo 2^64
    exactly like the scalar generator.
    """
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    a = np.uint64(LCG_MULTIPLIER)
    c = np.uint64(LCG_INCREMENT)
    s0 = np.uint64(seed % (1 << 64))
    pows = np.cumprod(np.full(count, a, dtype=np.uint64))
    terms = np.concatenate(([np.uint64(1)], pows[:count - 1]))
    geo = np.cumsum(terms, dtype=np.uint64)
    states = pows * s0 + c * geo
    span = np.uint64(2 * amplitude + 1)
    return ((states >> np.uint64(33)) % span).astype(np.int64) - amplitude


def layout_slot_map(script: LotScript) -> SlotMap:
    """Slot map of the scripted grid: row-major ids, a gutter on every side."""
    g = script.grid
    need_w = g.gutter + g.cols * (g.slot_w + g.gutter)
    need_h = g.gutter + g.rows * (g.slot_h + g.gutter)
    if need_w > script.width or need_h > script.height:
        raise LayoutOverflow(
            f"{g.rows}x{g.cols} grid needs {need_w}x{need_h}, "
            f"image is {script.width}x{script.height}")
    slots = []
    for r in range(g.rows):
        for c in range(g.cols):
            x0 = g.gutter + c * (g.slot_w + g.gutter)
            y0 = g.gutter + r * (g.slot_h + g.gutter)
            x1 = x0 + g.slot_w - 1
            y1 = y0 + g.slot_h - 1
            slots.append(SlotRegion(r * g.cols + c + 1, (
                Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1))))
    return SlotMap(script.lot_id, script.width, script.height, tuple(slots))


def car_rect(slot: SlotRegion) -> tuple[int, int, int, int]:
    """Inclusive (x0, y0, x1, y1) of the car rectangle: slot bbox inset 10%."""
    xs = [p.x for p in slot.points]
    ys = [p.y for p in slot.points]
    inset_x = max(1, round(0.1 * (max(xs) - min(xs) + 1)))
    inset_y = max(1, round(0.1 * (max(ys) - min(ys) + 1)))
    return min(xs) + inset_x, min(ys) + inset_y, max(xs) - inset_x, max(ys) - inset_y


def _episodes(script: LotScript) -> dict[int, list[tuple[int, int, int]]]:
    """Per slot: (start, end, intensity) intervals, end exclusive."""
    spans: dict[int, list[tuple[int, int, int]]] = {}
    for e in script.events:
        if e.action == "arrive":
            spans.setdefault(e.slot_id, []).append(
                (e.frame, script.total_frames, e.car_intensity))
        else:
            start, _, intensity = spans[e.slot_id][-1]
            spans[e.slot_id][-1] = (start, e.frame, intensity)
    return spans


def ground_truth(script: LotScript) -> GroundTruth:
    occ = np.zeros((script.total_frames, script.grid.rows * script.grid.cols),
                   dtype=bool)
    for slot_id, spans in _episodes(script).items():
        for start, end, _ in spans:
            occ[start:end, slot_id - 1] = True
    return GroundTruth(occ)


def generate(script: LotScript, seed: int, frames_dir: str | Path
             ) -> tuple[SlotMap, Frame, FrameSequence, GroundTruth]:
    """Render the script: slot map, reference frame, frame files, truth."""
    slot_map = layout_slot_map(script)
    truth = ground_truth(script)
    spans = _episodes(script)
    rects = {s.slot_id: car_rect(s) for s in slot_map.slots}
    w, h = script.width, script.height
    frames_dir = Path(frames_dir)
    frames_dir.mkdir(parents=True, exist_ok=True)

    def render(key: int, frame_index: int | None) -> np.ndarray:
        base = np.full((h, w), script.background_intensity, dtype=np.int64)
        if frame_index is not None:
            for slot_id, slot_spans in spans.items():
                for start, end, intensity in slot_spans:
                    if start <= frame_index < end:
                        x0, y0, x1, y1 = rects[slot_id]
                        base[y0:y1 + 1, x0:x1 + 1] = intensity
        noise = noise_stream(stream_seed(seed, key), w * h,
                             script.noise_amplitude).reshape(h, w)
        return np.clip(base + noise, 0, 255).astype(np.uint8)

    reference = Frame(w, h, render(0, None), -1)
    for i in range(script.total_frames):
        (frames_dir / f"f{i:04d}.pgm").write_bytes(write_pgm(render(i + 1, i)))
    return slot_map, reference, open_sequence(frames_dir), truth


def score(report: DetectionReport, truth: GroundTruth, settle: int) -> ScoreSummary:
    """Agreement between a detection report and scripted truth.

    Frames within `settle` frames after a slot's scripted transition are
    excluded from that slot's agreement figure; the lag list reports how
    many frames after each transition the detector reached the new state
    (None when it never did).
    """
    frames, slot_count = truth.occupancy.shape
    if len(report.timeline) != frames:
        raise DimensionMismatch(
            f"report has {len(report.timeline)} frames, truth has {frames}")
    if report.timeline and len(report.timeline[0].states) != slot_count:
        raise DimensionMismatch(
            f"report has {len(report.timeline[0].states)} slots, "
            f"truth has {slot_count}")
    detected = np.zeros((frames, slot_count), dtype=bool)
    for i, status in enumerate(report.timeline):
        for j, s in enumerate(sorted(status.states, key=lambda s: s.slot_id)):
            detected[i, j] = s.state == "occupied"
    included = np.ones((frames, slot_count), dtype=bool)
    lags: list[tuple[int, int, str, int | None]] = []
    for j in range(slot_count):
        col = truth.occupancy[:, j]
        prev = False
        for t in range(frames):
            if col[t] != prev:
                included[t:t + settle + 1, j] = False
                action = "arrive" if col[t] else "depart"
                hit = np.nonzero(detected[t:, j] == col[t])[0]
                lags.append((t, j + 1, action, int(hit[0]) if hit.size else None))
            prev = col[t]
    agree = detected == truth.occupancy
    per_slot = {}
    for j in range(slot_count):
        m = included[:, j]
        per_slot[j + 1] = float(agree[m, j].mean()) if m.any() else 1.0
    overall = float(agree[included].mean()) if included.any() else 1.0
    return ScoreSummary(overall, per_slot, lags)


def script_from_json(text: str) -> LotScript:
    """LotScript from its JSON form; optional keys take the defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"not a JSON document: {e}") from e
    if not isinstance(doc, dict):
        raise MalformedDocument("script must be a JSON object")
    unknown = set(doc) - set(_SCRIPT_KEYS)
    if unknown:
        raise MalformedDocument(f"script has unknown keys: {sorted(unknown)}")
    for k in ("lot_id", "width", "height", "grid", "total_frames", "events"):
        if k not in doc:
            raise MalformedDocument(f"script is missing required key {k!r}")
    grid_doc = doc["grid"]
    if not isinstance(grid_doc, dict) or set(grid_doc) != set(_GRID_KEYS):
        raise MalformedDocument(f"grid must be an object with keys {_GRID_KEYS}")
    if not isinstance(doc["events"], list):
        raise MalformedDocument("events must be a list")
    events = []
    for entry in doc["events"]:
        if not isinstance(entry, dict):
            raise MalformedDocument("each event must be an object")
        unknown = set(entry) - set(_EVENT_KEYS)
        if unknown:
            raise MalformedDocument(f"event has unknown keys: {sorted(unknown)}")
        for k in ("frame", "slot_id", "action"):
            if k not in entry:
                raise MalformedDocument(f"event is missing required key {k!r}")
        events.append(ScriptEvent(entry["frame"], entry["slot_id"], entry["action"],
                                  entry.get("car_intensity", 40)))
    return LotScript(
        lot_id=doc["lot_id"],
        width=doc["width"],
        height=doc["height"],
        grid=GridSpec(**grid_doc),
        total_frames=doc["total_frames"],
        events=tuple(events),
        background_intensity=doc.get("background_intensity", 120),
        noise_amplitude=doc.get("noise_amplitude", 3))


def script_to_json(script: LotScript) -> str:
    g = script.grid
    doc = {
        "lot_id": script.lot_id,
        "width": script.width,
        "height": script.height,
        "grid": {"rows": g.rows, "cols": g.cols, "slot_w": g.slot_w,
                 "slot_h": g.slot_h, "gutter": g.gutter},
        "background_intensity": script.background_intensity,
        "noise_amplitude": script.noise_amplitude,
        "total_frames": script.total_frames,
        "events": [
            {"frame": e.frame, "slot_id": e.slot_id, "action": e.action,
             "car_intensity": e.car_intensity}
            for e in script.events
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


def truth_to_json(truth: GroundTruth) -> str:
    frames, slots = truth.occupancy.shape
    doc = {"frames": frames, "slots": slots,
           "occupancy": truth.occupancy.astype(int).tolist()}
    return json.dumps(doc, separators=(",", ":"))


def truth_from_json(text: str) -> GroundTruth:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"not a JSON document: {e}") from e
    if not isinstance(doc, dict) or set(doc) != {"frames", "slots", "occupancy"}:
        raise MalformedDocument("truth must have keys frames, slots, occupancy")
    occ = np.array(doc["occupancy"], dtype=bool)
    if occ.shape != (doc["frames"], doc["slots"]):
        raise MalformedDocument("occupancy shape disagrees with frames x slots")
    return GroundTruth(occ)
