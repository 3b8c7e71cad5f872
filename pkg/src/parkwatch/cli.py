"""Operator commands: mark, simulate, detect, serve, score.

Exit codes: 0 success, 1 I/O or environment trouble, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
from datetime import datetime
from pathlib import Path

from .annotate import write_annotated
from .detection import (
    DetectionConfig,
    DetectionReport,
    config_from_json,
    run_detection,
    select_reference,
    status_to_doc,
    timeline_from_events,
)
from .events import event_line, parse_event_line
from .figures import write_agreement_figure, write_availability_figure
from .frames import NoFrames, decode_pgm, open_sequence, read_frame, write_pgm
from .geometry import (
    InvariantViolation,
    Point2,
    SlotMap,
    SlotRegion,
    parse_slot_map,
    serialize_slot_map,
)
from .service import ParkwatchService, make_server
from .simulator import (
    generate,
    score,
    script_from_json,
    truth_from_json,
    truth_to_json,
)
from .store import Store, load_store


def _parse_points_line(line: str) -> tuple[Point2, ...]:
    """`x1,y1 x2,y2 x3,y3 x4,y4` as four points; count is checked later."""
    points = []
    for token in line.split():
        x, sep, y = token.partition(",")
        if not sep or not x.lstrip("-").isdigit() or not y.lstrip("-").isdigit():
            raise InvariantViolation(f"bad point {token!r}")
        points.append(Point2(int(x), int(y)))
    return tuple(points)


def cmd_mark(args) -> None:
    pixels = decode_pgm(Path(args.image).read_bytes())
    height, width = pixels.shape
    lines = Path(args.points).read_text().splitlines()
    slots: list[SlotRegion] = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            points = _parse_points_line(line)
            if len(points) != 4:
                raise InvariantViolation(f"{len(points)} points, need 4")
            slots.append(SlotRegion(len(slots) + 1, points))
            # validate the whole map after every line so the first bad
            # line is the one named, overlaps with earlier slots included
            SlotMap(args.lot_id, width, height, tuple(slots)).validate()
        except (InvariantViolation, ValueError) as e:
            raise InvariantViolation(f"line {number}: {e}") from e
    slot_map = SlotMap(args.lot_id, width, height, tuple(slots))
    Path(args.out).write_text(serialize_slot_map(slot_map))
    print(f"slots: {len(slots)}")


def cmd_simulate(args) -> None:
    script = script_from_json(Path(args.script).read_text())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    slot_map, reference, seq, truth = generate(script, args.seed, out / "frames")
    (out / "slotmap.json").write_text(serialize_slot_map(slot_map))
    (out / "ref.pgm").write_bytes(write_pgm(reference.pixels))
    (out / "truth.json").write_text(truth_to_json(truth))
    print(f"frames: {len(seq)}")


def cmd_detect(args) -> None:
    slot_map = parse_slot_map(Path(args.map).read_text())
    seq = open_sequence(args.frames)
    reference = select_reference(seq, args.reference)
    cfg = (config_from_json(Path(args.config).read_text())
           if args.config else DetectionConfig())
    report = run_detection(seq, slot_map, reference, cfg)

    out = Path(args.out)
    annotated = out / "annotated"
    annotated.mkdir(parents=True, exist_ok=True)
    with open(out / "events.jsonl", "w") as log:
        for event in report.events:
            log.write(event_line(event) + "\n")
    (out / "final.json").write_text(json.dumps(
        {"lot_id": report.lot_id, **status_to_doc(report.final)},
        separators=(",", ":")))
    for i, status in enumerate(report.timeline):
        frame = read_frame(seq, i)
        states = {s.slot_id: s.state for s in status.states}
        name = Path(seq.names[i]).stem + ".ppm"
        (annotated / name).write_bytes(write_annotated(
            frame, slot_map, states, (status.available, status.total)))
    write_availability_figure(report, out / "availability.png")
    print(f"available {report.final.available}/{report.final.total}")


def cmd_serve(args) -> None:
    host, _, port_text = args.addr.rpartition(":")
    if not port_text.isdigit():
        raise InvariantViolation(f"addr must be host:port, got {args.addr!r}")
    store_path = Path(args.store)
    store = load_store(store_path) if store_path.exists() else Store()
    if args.seed_data:
        store.load_seed(args.seed_data)
    fixed_now = datetime.fromisoformat(args.now) if args.now else None
    cfg = (config_from_json(Path(args.config).read_text())
           if args.config else DetectionConfig())
    service = ParkwatchService(store, args.jobs_dir, config=cfg,
                               store_path=store_path, static_dir=args.static,
                               fixed_now=fixed_now)
    service.persist()
    server = make_server(service, host, int(port_text))

    def terminate(*_):
        raise KeyboardInterrupt

    signal.signal(signal.SIGTERM, terminate)
    bound_host, bound_port = server.server_address[:2]
    print(f"listening on http://{bound_host}:{bound_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        service.persist()


def cmd_score(args) -> None:
    report_dir = Path(args.report)
    final = json.loads((report_dir / "final.json").read_text())
    events = [parse_event_line(line)
              for line in (report_dir / "events.jsonl").read_text().splitlines()]
    timeline = timeline_from_events(events, final["frame"])
    report = DetectionReport(final["lot_id"], timeline, timeline[-1], events)
    truth = truth_from_json(Path(args.truth).read_text())
    summary = score(report, truth, args.settle)
    write_agreement_figure(summary, report_dir / "agreement.png")
    print(f"overall {summary.overall:.4f}")
    for slot_id in sorted(summary.per_slot):
        print(f"slot {slot_id} {summary.per_slot[slot_id]:.4f}")
    for frame, slot_id, action, lag in summary.lags:
        shown = "never" if lag is None else str(lag)
        print(f"lag slot {slot_id} {action}@{frame} {shown}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parkwatch",
        description="Parking lot occupancy from fixed-camera frames.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mark", help="build a slot map from a points file")
    p.add_argument("--image", required=True, help="reference PGM frame")
    p.add_argument("--points", required=True,
                   help="one slot per line: x1,y1 x2,y2 x3,y3 x4,y4")
    p.add_argument("--out", required=True, help="slot map JSON to write")
    p.add_argument("--lot-id", default="A", help="lot id for the map")
    p.set_defaults(func=cmd_mark)

    p = sub.add_parser("simulate", help="render a scripted lot recording")
    p.add_argument("--script", required=True, help="lot script JSON")
    p.add_argument("--seed", type=int, default=42, help="noise seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="run occupancy detection over frames")
    p.add_argument("--frames", required=True, help="directory of PGM frames")
    p.add_argument("--map", required=True, help="slot map JSON")
    p.add_argument("--reference", help="reference PGM (default: first frame)")
    p.add_argument("--config", help="detection config JSON")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--addr", default="127.0.0.1:8080", help="host:port to bind")
    p.add_argument("--store", required=True, help="store JSON file")
    p.add_argument("--seed-data", help="blocks/classes seed JSON")
    p.add_argument("--static", help="directory of web assets to serve under /")
    p.add_argument("--config", help="detection config JSON")
    p.add_argument("--jobs-dir", default="parkwatch-jobs",
                   help="where job artifacts are written")
    p.add_argument("--now", help="freeze the clock at this RFC 3339 instant")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("score", help="compare a report with scripted truth")
    p.add_argument("--report", required=True, help="detect output directory")
    p.add_argument("--truth", required=True, help="truth JSON from simulate")
    p.add_argument("--settle", type=int, default=2,
                   help="frames to exclude after each scripted transition")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except NoFrames as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
