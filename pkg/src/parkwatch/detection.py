"""Occupancy detection against an empty-lot reference frame.

A slot reads occupied when enough of its pixels differ from the reference
by more than a per-pixel threshold; a hysteresis band around the fraction
threshold keeps sensor noise from flickering the state between frames.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .events import OccupancyEvent
from .frames import DimensionMismatch, Frame, FrameSequence, decode_pgm, read_frame
from .geometry import InvariantViolation, MalformedDocument, SlotMap

_CONFIG_KEYS = ("pixel_delta_threshold", "changed_fraction_threshold",
                "hysteresis_margin", "settle_frames")


@dataclass(frozen=True)
class DetectionConfig:
    """Thresholds of the classifier; defaults suit the synthetic scenes."""

    pixel_delta_threshold: int = 25
    changed_fraction_threshold: float = 0.30
    hysteresis_margin: float = 0.05
    settle_frames: int = 2

    def __post_init__(self):
        if not 0 < self.pixel_delta_threshold < 255:
            raise InvariantViolation("pixel_delta_threshold must be in 1..254")
        if not 0 < self.changed_fraction_threshold < 1:
            raise InvariantViolation("changed_fraction_threshold must be in (0,1)")
        if not 0 <= self.hysteresis_margin < self.changed_fraction_threshold:
            raise InvariantViolation(
                "hysteresis_margin must be in [0, changed_fraction_threshold)")
        if self.settle_frames < 0:
            raise InvariantViolation("settle_frames must be >= 0")


@dataclass(frozen=True)
class RegionStats:
    slot_id: int
    pixel_count: int
    changed_pixels: int
    changed_fraction: float
    mean_intensity: float


@dataclass(frozen=True)
class SlotState:
    slot_id: int
    state: str
    since_frame: int


@dataclass(frozen=True)
class LotStatus:
    """Per-slot states of one frame plus the availability counter."""

    frame_index: int
    states: tuple[SlotState, ...]
    available: int
    total: int

    def __post_init__(self):
        vacant = sum(1 for s in self.states if s.state == "vacant")
        if self.available != vacant or self.total != len(self.states):
            raise InvariantViolation(
                f"counter {self.available}/{self.total} disagrees with "
                f"{vacant} vacant of {len(self.states)} states")


@dataclass
class DetectionReport:
    lot_id: str
    timeline: list[LotStatus]
    final: LotStatus
    events: list[OccupancyEvent] = field(default_factory=list)


def config_from_json(text: str) -> DetectionConfig:
    """DetectionConfig from a JSON object; absent keys take defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"not a JSON document: {e}") from e
    if not isinstance(doc, dict):
        raise MalformedDocument("config must be a JSON object")
    unknown = set(doc) - set(_CONFIG_KEYS)
    if unknown:
        raise MalformedDocument(f"config has unknown keys: {sorted(unknown)}")
    for k in ("pixel_delta_threshold", "settle_frames"):
        if k in doc and type(doc[k]) is not int:
            raise MalformedDocument(f"config key {k} must be an integer")
    for k in ("changed_fraction_threshold", "hysteresis_margin"):
        if k in doc and type(doc[k]) not in (int, float):
            raise MalformedDocument(f"config key {k} must be a number")
    return DetectionConfig(**doc)


def _flat_indices(pixels, width: int) -> np.ndarray:
    if isinstance(pixels, np.ndarray):
        return pixels
    arr = np.fromiter((y * width + x for x, y in sorted(pixels)),
                      dtype=np.int64, count=len(pixels))
    return arr


def compute_region_stats(frame: Frame, reference: Frame, pixels, tau_p: int,
                         slot_id: int = 0) -> RegionStats:
    """Count region pixels whose intensity moved more than tau_p.

    pixels may be a set of (x, y) pairs or a precomputed array of flat
    row-major indices; the latter is what run_detection feeds per slot.
    """
    if (frame.width, frame.height) != (reference.width, reference.height):
        raise DimensionMismatch(
            f"frame {frame.width}x{frame.height} vs reference "
            f"{reference.width}x{reference.height}")
    idx = _flat_indices(pixels, frame.width)
    cur = frame.pixels.reshape(-1)[idx].astype(np.int16)
    ref = reference.pixels.reshape(-1)[idx].astype(np.int16)
    changed = int(np.count_nonzero(np.abs(cur - ref) > tau_p))
    return RegionStats(
        slot_id=slot_id,
        pixel_count=len(idx),
        changed_pixels=changed,
        changed_fraction=changed / len(idx),
        mean_intensity=float(cur.mean()))


def classify_slot(stats: RegionStats, prev: SlotState | None, cfg: DetectionConfig,
                  frame_index: int = 0) -> SlotState:
    """Apply the fraction threshold, with hysteresis once a state exists."""
    tau_f = cfg.changed_fraction_threshold
    h = cfg.hysteresis_margin
    if prev is None:
        state = "occupied" if stats.changed_fraction >= tau_f else "vacant"
        return SlotState(stats.slot_id, state, frame_index)
    if prev.state == "occupied":
        state = "vacant" if stats.changed_fraction < tau_f - h else "occupied"
    else:
        state = "occupied" if stats.changed_fraction >= tau_f + h else "vacant"
    if state == prev.state:
        return SlotState(stats.slot_id, state, prev.since_frame)
    return SlotState(stats.slot_id, state, frame_index)


def evaluate_frame(frame: Frame, slot_map: SlotMap, reference: Frame,
                   prev: LotStatus | None, cfg: DetectionConfig,
                   pixels: dict[int, np.ndarray] | None = None) -> LotStatus:
    """Classify every slot of one frame; pure function of its inputs."""
    if pixels is None:
        pixels = {sid: _flat_indices(pts, slot_map.image_width)
                  for sid, pts in slot_map.rasterize().items()}
    prev_states = {s.slot_id: s for s in prev.states} if prev else {}
    states = []
    for slot in slot_map.slots:
        stats = compute_region_stats(frame, reference, pixels[slot.slot_id],
                                     cfg.pixel_delta_threshold, slot_id=slot.slot_id)
        states.append(classify_slot(stats, prev_states.get(slot.slot_id), cfg,
                                    frame_index=frame.index))
    available = sum(1 for s in states if s.state == "vacant")
    return LotStatus(frame.index, tuple(states), available, len(states))


def run_detection(seq: FrameSequence, slot_map: SlotMap, reference: Frame,
                  cfg: DetectionConfig, on_event=None) -> DetectionReport:
    """Fold the classifier over a frame sequence, collecting change events.

    The first frame emits one event per slot (the initial states); later
    frames emit events only for slots that changed. Every event carries
    the availability counter of its frame after full evaluation. on_event,
    when given, sees each event as soon as its frame is evaluated, so a
    caller can stream progress while the run is still going.
    """
    if (seq.width, seq.height) != (slot_map.image_width, slot_map.image_height):
        raise DimensionMismatch(
            f"sequence {seq.width}x{seq.height} vs slot map "
            f"{slot_map.image_width}x{slot_map.image_height}")
    pixels = {sid: _flat_indices(pts, slot_map.image_width)
              for sid, pts in slot_map.rasterize().items()}
    timeline: list[LotStatus] = []
    events: list[OccupancyEvent] = []
    prev: LotStatus | None = None
    for i in range(len(seq)):
        frame = read_frame(seq, i)
        status = evaluate_frame(frame, slot_map, reference, prev, cfg, pixels)
        prev_states = {s.slot_id: s.state for s in prev.states} if prev else {}
        for s in status.states:
            if prev is None or prev_states[s.slot_id] != s.state:
                event = OccupancyEvent(i, s.slot_id, s.state,
                                       status.available, status.total)
                events.append(event)
                if on_event is not None:
                    on_event(event)
        timeline.append(status)
        prev = status
    return DetectionReport(slot_map.lot_id, timeline, timeline[-1], events)


def select_reference(seq: FrameSequence, reference_path: str | Path | None) -> Frame:
    """Explicit reference file when given, else frame 0 of the sequence."""
    if reference_path is None:
        return read_frame(seq, 0)
    pixels = decode_pgm(Path(reference_path).read_bytes())
    h, w = pixels.shape
    if (w, h) != (seq.width, seq.height):
        raise DimensionMismatch(
            f"reference is {w}x{h}, sequence is {seq.width}x{seq.height}")
    return Frame(w, h, pixels, -1)


def timeline_from_events(events: list[OccupancyEvent],
                         last_frame: int) -> list[LotStatus]:
    """Rebuild the per-frame timeline from a delta event log.

    The log's contract makes this exact: frame 0 names every slot, later
    frames name only the slots that changed, so folding the deltas up to
    `last_frame` reproduces what evaluate_frame reported at every step.
    """
    by_frame: dict[int, list[OccupancyEvent]] = {}
    for e in events:
        by_frame.setdefault(e.frame, []).append(e)
    if last_frame < 0 or 0 not in by_frame:
        raise MalformedDocument("event log is missing the frame 0 events")
    states: dict[int, str] = {}
    since: dict[int, int] = {}
    timeline: list[LotStatus] = []
    for i in range(last_frame + 1):
        for e in by_frame.get(i, ()):
            states[e.slot_id] = e.state
            since[e.slot_id] = i
        snapshot = tuple(SlotState(sid, states[sid], since[sid])
                         for sid in sorted(states))
        available = sum(1 for s in snapshot if s.state == "vacant")
        timeline.append(LotStatus(i, snapshot, available, len(snapshot)))
    return timeline


def status_to_doc(status: LotStatus) -> dict:
    return {
        "frame": status.frame_index,
        "available": status.available,
        "total": status.total,
        "states": [
            {"slot_id": s.slot_id, "state": s.state, "since_frame": s.since_frame}
            for s in status.states
        ],
    }


def report_to_json(report: DetectionReport) -> str:
    """Canonical JSON summary: final states plus the full event list."""
    doc = {
        "lot_id": report.lot_id,
        "frames": len(report.timeline),
        "final": status_to_doc(report.final),
        "events": [
            {"frame": e.frame, "slot_id": e.slot_id, "state": e.state,
             "available": e.available, "total": e.total}
            for e in report.events
        ],
    }
    return json.dumps(doc, separators=(",", ":"))
