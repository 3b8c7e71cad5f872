"""Top-level acceptance checks, one printed PASS/FAIL line per promise.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they
print. Each test exercises one end-to-end promise at full size; the unit
suites cover the same code at finer grain.
"""

import random
import threading
import time
from datetime import datetime, timezone
from types import SimpleNamespace

import pytest
import requests

from parkwatch.detection import (
    DetectionConfig,
    LotStatus,
    SlotState,
    run_detection,
)
from parkwatch.events import event_line, replay_events
from parkwatch.frames import write_pgm
from parkwatch.geometry import (
    EmptyRegion,
    Point2,
    parse_slot_map,
    point_in_quad,
    rasterize_region,
    serialize_slot_map,
)
from parkwatch.service import ParkwatchService, make_server
from parkwatch.simulator import GridSpec, LotScript, ScriptEvent, generate, score
from parkwatch.store import (
    Block,
    ClassEntry,
    PasswordAllNumeric,
    PasswordSimilarToUsername,
    PasswordTooCommon,
    PasswordTooShort,
    Store,
    load_store,
    persist_store,
)
from parkwatch.suggestion import EASTERN, suggest_from_schedule

from test_geometry import oracle_contains, oracle_grid, random_simple_quad, region


def check(name: str, **conditions: bool) -> None:
    failed = [k for k, v in conditions.items() if not v]
    print(f"[ACCEPTANCE] {name}: {'FAIL' if failed else 'PASS'}")
    assert not failed, f"{name}: failed {failed}"


# Lot A: 8 slots in 2 rows of 4, five cars parked throughout, one car
# that arrives mid-recording and leaves again. Lot B: a single row of 7
# with one drive-through visitor.
LOT_A_SCRIPT = LotScript("A", 640, 480, GridSpec(2, 4, 120, 180, 20), 300, (
    ScriptEvent(0, 1, "arrive"),
    ScriptEvent(0, 2, "arrive"),
    ScriptEvent(0, 4, "arrive"),
    ScriptEvent(0, 5, "arrive"),
    ScriptEvent(0, 7, "arrive"),
    ScriptEvent(80, 6, "arrive"),
    ScriptEvent(220, 6, "depart"),
))
LOT_B_SCRIPT = LotScript("B", 640, 480, GridSpec(1, 7, 60, 200, 20), 240, (
    ScriptEvent(100, 4, "arrive"),
    ScriptEvent(200, 4, "depart"),
))

# Monday 09:30 in the fixed eastern offset.
E2E_NOW = datetime(2024, 3, 4, 14, 30, tzinfo=timezone.utc)

CLASSES = {
    "CMSC313": ClassEntry("CMSC313", "Assembly", ("Mon", "Wed"), 600, 650, "A"),
    "CMSC411": ClassEntry("CMSC411", "Architecture", ("Mon", "Wed"), 600, 650, "A"),
    "CMSC447": ClassEntry("CMSC447", "Engineering", ("Tue", "Thu"), 780, 830, "A"),
    "ENGL201": ClassEntry("ENGL201", "Essays", ("Mon",), 540, 590, "B"),
    "MATH221": ClassEntry("MATH221", "Linear Algebra", ("Tue",), 600, 650, "B"),
    "PHYS122": ClassEntry("PHYS122", "Mechanics", ("Fri",), 840, 890, "B"),
}


def run_scenario(script, seed, root):
    slot_map, reference, seq, truth = generate(script, seed, root / "frames")
    (root / "slotmap.json").write_text(serialize_slot_map(slot_map))
    (root / "ref.pgm").write_bytes(write_pgm(reference.pixels))
    start = time.perf_counter()
    report = run_detection(seq, slot_map, reference, DetectionConfig())
    elapsed = time.perf_counter() - start
    return SimpleNamespace(root=root, slot_map=slot_map, truth=truth,
                           report=report, elapsed=elapsed)


@pytest.fixture(scope="session")
def scenario_a(tmp_path_factory):
    return run_scenario(LOT_A_SCRIPT, 1234, tmp_path_factory.mktemp("lot_a"))


@pytest.fixture(scope="session")
def scenario_b(tmp_path_factory):
    return run_scenario(LOT_B_SCRIPT, 5678, tmp_path_factory.mktemp("lot_b"))


@pytest.fixture(scope="session")
def live(scenario_a, scenario_b, tmp_path_factory):
    """The service over both scenario lots, frozen at the Monday instant."""
    root = tmp_path_factory.mktemp("service")
    store = Store()
    store.add_block(Block("A", "North lot",
                          str(scenario_a.root / "slotmap.json")))
    store.add_block(Block("B", "South lot",
                          str(scenario_b.root / "slotmap.json")))
    for entry in CLASSES.values():
        store.add_class(entry)
    service = ParkwatchService(store, root / "jobs",
                               store_path=root / "store.json",
                               fixed_now=E2E_NOW)
    server = make_server(service)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    try:
        yield SimpleNamespace(base=base, service=service, store=store)
    finally:
        server.shutdown()
        server.server_close()


def test_lot_a_scenario(scenario_a):
    summary = score(scenario_a.report, scenario_a.truth, settle=2)
    lags = [lag for *_, lag in summary.lags]
    check(
        "lot-A stationary plus roving car",
        eight_slots=len(scenario_a.slot_map.slots) == 8,
        full_agreement_outside_settle=summary.overall == 1.0,
        every_slot_agrees=all(v == 1.0 for v in summary.per_slot.values()),
        max_lag_at_most_2=all(l is not None and l <= 2 for l in lags),
        final_counter=scenario_a.report.final.available == 3
        and scenario_a.report.final.total == 8,
        under_10_seconds=scenario_a.elapsed < 10.0,
    )


def test_lot_b_scenario(scenario_b):
    report = scenario_b.report
    visits = [e for e in report.events if e.frame > 0 and e.slot_id == 4]
    others = [e for e in report.events if e.frame > 0 and e.slot_id != 4]
    truth_final = scenario_b.truth.occupancy[-1]
    final_states = {s.slot_id: s.state for s in report.final.states}
    check(
        "lot-B drive-through",
        seven_slots=len(scenario_b.slot_map.slots) == 7,
        exactly_two_transitions=[e.state for e in visits] == ["occupied",
                                                             "vacant"],
        no_other_slot_changes=others == [],
        final_matches_truth=all(
            (final_states[i + 1] == "occupied") == bool(truth_final[i])
            for i in range(7)),
        final_counter=report.final.available == 7 and report.final.total == 7,
    )


def test_counter_conservation(scenario_a, scenario_b):
    def violations(report, total):
        bad = 0
        for status in report.timeline:
            occupied = sum(1 for s in status.states if s.state == "occupied")
            if status.available + occupied != total or status.total != total:
                bad += 1
        return bad

    check(
        "counter conservation on every frame",
        lot_a_zero_violations=violations(scenario_a.report, 8) == 0,
        lot_b_zero_violations=violations(scenario_b.report, 7) == 0,
        all_frames_seen=len(scenario_a.report.timeline) == 300
        and len(scenario_b.report.timeline) == 240,
    )


def test_geometry_against_oracle():
    rng = random.Random(4242)
    pairs = disagreements = 0
    while pairs < 10_000:
        quad = region(random_simple_quad(rng, 200, 160))
        verts = [(q.x, q.y) for q in quad.points]
        for _ in range(25):
            p = Point2(rng.randrange(200), rng.randrange(160))
            if point_in_quad(p, quad) != oracle_contains(p.x, p.y, verts):
                disagreements += 1
            pairs += 1

    rasters_checked = rasters_equal = 0
    while rasters_checked < 50:
        quad = region(random_simple_quad(rng, 120, 90))
        mask = oracle_grid([(q.x, q.y) for q in quad.points], 120, 90)
        expected = frozenset(
            (int(x), int(y)) for y, x in zip(*mask.nonzero()))
        try:
            got = rasterize_region(quad, 120, 90)
        except EmptyRegion:
            assert len(expected) < 16
            continue
        rasters_checked += 1
        rasters_equal += got == expected

    check(
        "geometry agrees with the oracle",
        pairs_at_least_10000=pairs >= 10_000,
        containment_agreement=disagreements == 0,
        raster_scans_equal=rasters_equal == rasters_checked == 50,
    )


def test_round_trips(scenario_a, scenario_b, tmp_path, lot_a_slotmap_text):
    text_identity = serialize_slot_map(
        parse_slot_map(lot_a_slotmap_text)) == lot_a_slotmap_text
    map_identity = all(
        parse_slot_map(serialize_slot_map(s.slot_map)) == s.slot_map
        for s in (scenario_a, scenario_b))

    store = Store()
    store.add_block(Block("A", "North lot", "a.json"))
    store.add_class(ClassEntry("CMSC313", "Assembly", ("Mon",), 600, 650, "A"))
    store.create_user("alice", "horse-battery-7")
    store.login("alice", "horse-battery-7")
    store.set_schedule("alice", {"CMSC313": True})
    store.register_video("A", "frames", "ref.pgm")
    persist_store(store, tmp_path / "store.json")
    store_identity = load_store(tmp_path / "store.json") == store

    def replays(report):
        states, available, total = replay_events(
            event_line(e) for e in report.events)
        return (states == {s.slot_id: s.state for s in report.final.states}
                and available == report.final.available
                and total == report.final.total)

    check(
        "serialization round-trips",
        slot_map_text_identity=text_identity,
        slot_map_value_identity=map_identity,
        store_identity=store_identity,
        event_replay_lot_a=replays(scenario_a.report),
        event_replay_lot_b=replays(scenario_b.report),
    )


def test_password_policy_and_login_bodies(live):
    table = [
        ("short", "abc123", PasswordTooShort),
        ("similar", "xx-similar-xx", PasswordSimilarToUsername),
        ("common", "password", PasswordTooCommon),
        ("digits", "12345678", PasswordAllNumeric),
    ]
    outcomes = {}
    probe = Store()
    for username, password, expected in table:
        try:
            probe.create_user(username, password)
            outcomes[expected.__name__] = False
        except Exception as e:
            outcomes[expected.__name__] = type(e) is expected
    try:
        probe.create_user("clean", "horse-battery-7")
        outcomes["valid_accepted"] = True
    except Exception:
        outcomes["valid_accepted"] = False

    api = [requests.post(f"{live.base}/api/register",
                         json={"username": u, "password": p}).json()["error_code"]
           for u, p, _ in table]
    r = requests.post(f"{live.base}/api/register",
                      json={"username": "policyok", "password": "plum-orbit-9"})
    wrong_pw = requests.post(f"{live.base}/api/login",
                             json={"username": "policyok", "password": "bad-bad-9"})
    no_user = requests.post(f"{live.base}/api/login",
                            json={"username": "nobody", "password": "plum-orbit-9"})

    check(
        "password policy and login bodies",
        each_rule_right_code=all(outcomes.values()),
        api_codes_match=api == [e.__name__ for *_, e in table],
        registered_ok=r.status_code == 201,
        both_logins_401=wrong_pw.status_code == no_user.status_code == 401,
        bodies_byte_identical=wrong_pw.content == no_user.content,
    )


def test_latest_video_over_random_orders():
    rng = random.Random(99)
    orders_ok = 0
    for _ in range(100):
        store = Store()
        store.add_block(Block("A", "North lot", "a.json"))
        store.add_block(Block("B", "South lot", "b.json"))
        placed = [rng.choice("AB") for _ in range(rng.randrange(2, 12))]
        for i, block in enumerate(placed):
            store.register_video(block, f"frames-{i}", "")
        good = True
        for block in "AB":
            mine = [r.record_id for r in store.videos if r.block_id == block]
            if mine:
                good &= store.latest_video(block).record_id == max(mine)
            else:
                try:
                    store.latest_video(block)
                    good = False
                except Exception:
                    pass
        orders_ok += good
    check("latest video wins per block", all_100_orders=orders_ok == 100)


def make_status(available, total):
    states = tuple(SlotState(i + 1, "vacant" if i < available else "occupied", 0)
                   for i in range(total))
    return LotStatus(0, states, available, total)


def test_suggestion_matrix():
    enrolled = ["CMSC313", "CMSC411", "CMSC447", "MATH221"]
    schedule = [CLASSES[c] for c in enrolled]

    def at(day, hour, minute):
        return datetime(2024, 3, day, hour, minute, tzinfo=EASTERN)

    # (now, avail_a, avail_b) -> (block, reason, class, available, total)
    cases = [
        (at(4, 9, 30), 3, 7, ("A", "upcoming_class", "CMSC313", 3, 8)),
        (at(4, 9, 30), 0, 7, ("B", "home_block_full_fallback", "CMSC313", 7, 7)),
        (at(4, 9, 30), 0, 0, (None, "no_availability", None, 0, 0)),
        (at(4, 10, 30), 3, 7, ("A", "upcoming_class", "CMSC313", 3, 8)),
        (at(4, 11, 0), 3, 7,
         ("B", "no_upcoming_class_max_availability", None, 7, 7)),
        (at(5, 12, 0), 3, 7, ("A", "upcoming_class", "CMSC447", 3, 8)),
        (at(5, 9, 55), 3, 7, ("B", "upcoming_class", "MATH221", 7, 7)),
        (at(5, 9, 55), 3, 0, ("A", "home_block_full_fallback", "MATH221", 3, 8)),
        (at(9, 12, 0), 3, 7,
         ("B", "no_upcoming_class_max_availability", None, 7, 7)),
        (at(9, 12, 0), 7, 7,
         ("A", "no_upcoming_class_max_availability", None, 7, 8)),
        (at(9, 12, 0), 0, 0, (None, "no_availability", None, 0, 0)),
        (at(4, 7, 0), 3, 7,
         ("B", "no_upcoming_class_max_availability", None, 7, 7)),
    ]

    results = {}
    for i, (now, avail_a, avail_b, want) in enumerate(cases, start=1):
        statuses = {"A": make_status(avail_a, 8), "B": make_status(avail_b, 7)}
        runs = {
            (g.block_id, g.reason, g.class_id, g.available, g.total)
            for g in (suggest_from_schedule(schedule, statuses, now)
                      for _ in range(3))
        }
        results[f"case_{i}"] = runs == {want}
    check("suggestion rule matrix", twelve_cases=len(cases) == 12, **results)


def test_end_to_end_headless(live):
    s = requests.Session()
    assert s.post(f"{live.base}/api/register",
                  json={"username": "student",
                        "password": "walk-to-class-9"}).status_code == 201
    assert s.post(f"{live.base}/api/login",
                  json={"username": "student",
                        "password": "walk-to-class-9"}).status_code == 200
    assert s.put(f"{live.base}/api/schedule",
                 json={"selections": {"CMSC313": True}}).status_code == 200

    for block in ("A", "B"):
        root = live.store.blocks[block].slot_map_path.rsplit("/", 1)[0]
        r = s.post(f"{live.base}/api/videos", json={
            "block_id": block, "frames_path": f"{root}/frames",
            "reference_path": f"{root}/ref.pgm"})
        assert r.status_code == 201

    r = s.post(f"{live.base}/api/find-parking")
    assert r.status_code == 202
    jobs = {j["block_id"]: j["job_id"] for j in r.json()["jobs"]}

    finals, fetched = {}, {b: 0 for b in jobs}
    deadline = time.monotonic() + 120
    while len(finals) < len(jobs) and time.monotonic() < deadline:
        for block, job_id in jobs.items():
            if block in finals:
                continue
            doc = s.get(f"{live.base}/api/jobs/{job_id}/events",
                        params={"since": fetched[block]}).json()
            fetched[block] += len(doc["events"])
            if doc["state"] == "done":
                finals[block] = doc["final"]
            assert doc["state"] != "failed", doc
        time.sleep(0.1)

    suggestion = s.get(f"{live.base}/api/suggestion")
    check(
        "end-to-end over HTTP",
        both_jobs_done=len(finals) == 2,
        lot_a_counter=finals["A"]["available"] == 3
        and finals["A"]["total"] == 8,
        lot_b_counter=finals["B"]["available"] == 7
        and finals["B"]["total"] == 7,
        events_streamed=fetched["A"] == 10 and fetched["B"] == 9,
        suggestion_ok=suggestion.status_code == 200
        and suggestion.json() == {"block_id": "A", "reason": "upcoming_class",
                                  "class_id": "CMSC313", "available": 3,
                                  "total": 8},
    )
