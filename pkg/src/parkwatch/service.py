"""HTTP JSON service: accounts, schedules, videos, detection jobs, suggestions.

Built on the standard library's threading HTTP server so response bodies
are byte-exact under our control (the login failure body in particular
must be identical for unknown users and wrong passwords). Detection jobs
run on worker threads and append their events to a per-job log file, so
a restarted server still has every finished run's artifacts on disk.
"""

from __future__ import annotations

import json
import mimetypes
import secrets
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.cookies import SimpleCookie
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .detection import (
    DetectionConfig,
    LotStatus,
    run_detection,
    select_reference,
    status_to_doc,
)
from .events import append_event
from .frames import open_sequence
from .geometry import parse_slot_map
from .store import (
    InvalidCredentials,
    NoVideoRegistered,
    PasswordAllNumeric,
    PasswordSimilarToUsername,
    PasswordTooCommon,
    PasswordTooShort,
    SessionExpired,
    SessionInvalid,
    Store,
    UnknownBlock,
    UnknownClass,
    UsernameTaken,
    VideoRecord,
    persist_store,
)
from .suggestion import suggest

SESSION_COOKIE = "parkwatch_session"
SESSION_MAX_AGE = 14 * 24 * 3600

_POLICY_STATUS = {
    UsernameTaken: 409,
    PasswordTooShort: 422,
    PasswordSimilarToUsername: 422,
    PasswordTooCommon: 422,
    PasswordAllNumeric: 422,
    UnknownClass: 422,
    UnknownBlock: 404,
}

# single prebuilt bodies so equal failures are equal on the wire, byte for byte
_LOGIN_FAILED_BODY = json.dumps(
    {"error_code": "invalid_credentials",
     "message": "invalid username or password"}).encode()
_UNAUTHENTICATED_BODY = json.dumps(
    {"error_code": "unauthenticated",
     "message": "a valid session cookie is required"}).encode()


class Unauthenticated(Exception):
    pass


@dataclass
class DetectionJob:
    """One on-demand detection run over a block's latest video."""

    job_id: str
    block_id: str
    record: VideoRecord
    state: str = "pending"
    events: list = field(default_factory=list)
    final: LotStatus | None = None
    error: str | None = None


class ParkwatchService:
    """Shared state behind the HTTP handlers."""

    def __init__(self, store: Store, jobs_dir: str | Path,
                 config: DetectionConfig | None = None,
                 store_path: str | Path | None = None,
                 static_dir: str | Path | None = None,
                 fixed_now: datetime | None = None):
        self.store = store
        self.jobs_dir = Path(jobs_dir)
        self.config = config or DetectionConfig()
        self.store_path = Path(store_path) if store_path else None
        self.static_dir = Path(static_dir) if static_dir else None
        self.fixed_now = fixed_now
        self.jobs: dict[str, DetectionJob] = {}
        self.user_jobs: dict[str, list[str]] = {}
        self.user_latest_batch: dict[str, list[str]] = {}
        self._jobs_lock = threading.Lock()

    def now(self) -> datetime:
        return self.fixed_now if self.fixed_now else datetime.now(timezone.utc)

    def persist(self) -> None:
        if self.store_path is not None:
            persist_store(self.store, self.store_path)

    def start_jobs(self, username: str) -> list[DetectionJob]:
        """One job per block over that block's latest video; workers detached."""
        with self._jobs_lock:
            batch = []
            for block_id in sorted(self.store.blocks):
                record = self.store.latest_video(block_id)
                job = DetectionJob(secrets.token_hex(16), block_id, record)
                self.jobs[job.job_id] = job
                batch.append(job)
            self.user_jobs.setdefault(username, []).extend(j.job_id for j in batch)
            self.user_latest_batch[username] = [j.job_id for j in batch]
        for job in batch:
            threading.Thread(target=self._run_job, args=(job,), daemon=True).start()
        return batch

    def _run_job(self, job: DetectionJob) -> None:
        job.state = "running"
        job_dir = self.jobs_dir / job.job_id
        job_dir.mkdir(parents=True, exist_ok=True)
        try:
            slot_map = parse_slot_map(Path(job.record.slot_map_path).read_text())
            seq = open_sequence(job.record.frames_path)
            reference = select_reference(seq, job.record.reference_path or None)
            with open(job_dir / "events.jsonl", "w") as log:
                def emit(event):
                    append_event(log, event)
                    job.events.append(event)
                report = run_detection(seq, slot_map, reference, self.config,
                                       on_event=emit)
            (job_dir / "final.json").write_text(json.dumps(
                {"lot_id": report.lot_id, **status_to_doc(report.final)},
                separators=(",", ":")))
            job.final = report.final
            job.state = "done"
        except Exception as e:
            job.error = f"{type(e).__name__}: {e}"
            (job_dir / "error.txt").write_text(job.error)
            job.state = "failed"


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "parkwatch"

    @property
    def svc(self) -> ParkwatchService:
        return self.server.service

    def log_message(self, format, *args):
        pass

    # ---- plumbing ----

    def _send_raw(self, status: int, body: bytes, content_type: str,
                  extra_headers: dict[str, str] | None = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for name, value in (extra_headers or {}).items():
            self.send_header(name, value)
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, doc: dict,
                   extra_headers: dict[str, str] | None = None) -> None:
        self._send_raw(status, json.dumps(doc).encode(), "application/json",
                       extra_headers)

    def _send_error_code(self, status: int, error_code: str, message: str,
                         **extra) -> None:
        self._send_json(status, {"error_code": error_code, "message": message, **extra})

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        try:
            doc = json.loads(raw) if raw else {}
        except json.JSONDecodeError:
            raise ValueError("request body is not valid JSON")
        if not isinstance(doc, dict):
            raise ValueError("request body must be a JSON object")
        return doc

    def _session_username(self) -> str:
        cookie = SimpleCookie(self.headers.get("Cookie", ""))
        morsel = cookie.get(SESSION_COOKIE)
        if morsel is None:
            raise Unauthenticated()
        try:
            return self.svc.store.validate_session(morsel.value, self.svc.now())
        except (SessionInvalid, SessionExpired):
            raise Unauthenticated()

    # ---- dispatch ----

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PUT(self):
        self._dispatch("PUT")

    def _dispatch(self, method: str) -> None:
        url = urlparse(self.path)
        path = url.path
        try:
            if path.startswith("/api/"):
                self._dispatch_api(method, path, url)
            elif method == "GET":
                self._serve_static(path)
            else:
                self._send_error_code(405, "method_not_allowed",
                                      f"{method} not supported here")
        except Unauthenticated:
            self._send_raw(401, _UNAUTHENTICATED_BODY, "application/json")
        except ValueError as e:
            self._send_error_code(400, "malformed_request", str(e))
        except BrokenPipeError:
            pass

    def _dispatch_api(self, method: str, path: str, url) -> None:
        route = (method, path)
        if route == ("POST", "/api/register"):
            return self._register()
        if route == ("POST", "/api/login"):
            return self._login()
        if route == ("GET", "/api/classes"):
            return self._classes()
        if route == ("GET", "/api/schedule"):
            return self._get_schedule()
        if route == ("PUT", "/api/schedule"):
            return self._put_schedule()
        if route == ("POST", "/api/videos"):
            return self._register_video()
        if route == ("POST", "/api/find-parking"):
            return self._find_parking()
        if method == "GET" and path.startswith("/api/jobs/") \
                and path.endswith("/events"):
            return self._job_events(path.split("/")[3], url)
        if route == ("GET", "/api/suggestion"):
            return self._suggestion()
        self._send_error_code(404, "not_found", f"no route for {method} {path}")

    # ---- endpoints ----

    def _register(self):
        body = self._read_body()
        username = body.get("username")
        password = body.get("password")
        if not isinstance(username, str) or not isinstance(password, str):
            raise ValueError("username and password are required strings")
        try:
            user = self.svc.store.create_user(username, password, now=self.svc.now())
        except tuple(_POLICY_STATUS) as e:
            return self._send_error_code(_POLICY_STATUS[type(e)],
                                         type(e).__name__, str(e))
        self.svc.persist()
        self._send_json(201, {"username": user.username})

    def _login(self):
        body = self._read_body()
        username = body.get("username")
        password = body.get("password")
        if not isinstance(username, str) or not isinstance(password, str):
            raise ValueError("username and password are required strings")
        try:
            session = self.svc.store.login(username, password, now=self.svc.now())
        except InvalidCredentials:
            return self._send_raw(401, _LOGIN_FAILED_BODY, "application/json")
        self.svc.persist()
        cookie = (f"{SESSION_COOKIE}={session.token}; HttpOnly; Path=/; "
                  f"Max-Age={SESSION_MAX_AGE}")
        self._send_json(200, {"username": username}, {"Set-Cookie": cookie})

    def _classes(self):
        self._session_username()
        doc = [self._class_doc(c) for c in sorted(self.svc.store.classes.values(),
                                                  key=lambda c: c.class_id)]
        self._send_json(200, {"classes": doc})

    @staticmethod
    def _class_doc(c, enrolled=None):
        doc = {"class_id": c.class_id, "title": c.title, "days": list(c.days),
               "start_time": c.start_time, "end_time": c.end_time,
               "home_block": c.home_block}
        if enrolled is not None:
            doc["enrolled"] = enrolled
        return doc

    def _get_schedule(self):
        username = self._session_username()
        selections = self.svc.store.schedules.get(username, {})
        doc = [self._class_doc(c, enrolled=selections.get(c.class_id, False))
               for c in sorted(self.svc.store.classes.values(),
                               key=lambda c: c.class_id)]
        self._send_json(200, {"username": username, "classes": doc})

    def _put_schedule(self):
        username = self._session_username()
        body = self._read_body()
        selections = body.get("selections")
        if not isinstance(selections, dict) \
                or not all(isinstance(v, bool) for v in selections.values()):
            raise ValueError('body must be {"selections": {"<class_id>": bool}}')
        try:
            self.svc.store.set_schedule(username, selections)
        except UnknownClass as e:
            return self._send_error_code(422, "UnknownClass", str(e))
        self.svc.persist()
        self._send_json(200, {"username": username,
                              "enrolled": self.svc.store.enrolled_classes(username)})

    def _register_video(self):
        self._session_username()
        body = self._read_body()
        for key in ("block_id", "frames_path"):
            if not isinstance(body.get(key), str):
                raise ValueError(f"{key} is a required string")
        reference_path = body.get("reference_path", "")
        if not isinstance(reference_path, str):
            raise ValueError("reference_path must be a string")
        try:
            record = self.svc.store.register_video(
                body["block_id"], body["frames_path"], reference_path,
                now=self.svc.now())
        except UnknownBlock as e:
            return self._send_error_code(404, "UnknownBlock", str(e))
        self.svc.persist()
        self._send_json(201, {
            "record_id": record.record_id, "block_id": record.block_id,
            "frames_path": record.frames_path,
            "slot_map_path": record.slot_map_path,
            "reference_path": record.reference_path,
            "registered_at": record.registered_at.isoformat()})

    def _find_parking(self):
        username = self._session_username()
        try:
            batch = self.svc.start_jobs(username)
        except NoVideoRegistered as e:
            block = str(e).split("'")[1] if "'" in str(e) else ""
            return self._send_error_code(409, "NoVideoRegistered", str(e),
                                         block_id=block)
        self._send_json(202, {"jobs": [
            {"job_id": j.job_id, "block_id": j.block_id} for j in batch]})

    def _job_events(self, job_id: str, url):
        self._session_username()
        job = self.svc.jobs.get(job_id)
        if job is None:
            return self._send_error_code(404, "UnknownJob", f"no job {job_id!r}")
        query = parse_qs(url.query)
        try:
            since = int(query.get("since", ["0"])[0])
        except ValueError:
            raise ValueError("since must be an integer")
        events = job.events[max(since, 0):]
        doc = {"state": job.state, "events": [
            {"frame": e.frame, "slot_id": e.slot_id, "state": e.state,
             "available": e.available, "total": e.total}
            for e in events]}
        if job.state == "done":
            doc["final"] = status_to_doc(job.final)
        if job.state == "failed":
            doc["error"] = job.error
        self._send_json(200, doc)

    def _suggestion(self):
        username = self._session_username()
        job_ids = self.svc.user_jobs.get(username, [])
        if not job_ids:
            return self._send_error_code(
                409, "JobsPending", "run find-parking before asking for a suggestion")
        jobs = [self.svc.jobs[j] for j in job_ids]
        if any(j.state in ("pending", "running") for j in jobs):
            return self._send_error_code(
                409, "JobsPending", "detection jobs are still running")
        latest = [self.svc.jobs[j] for j in self.svc.user_latest_batch[username]]
        statuses = {j.block_id: j.final for j in latest if j.state == "done"}
        if not statuses:
            return self._send_error_code(
                409, "JobsFailed", "every detection job of the last run failed")
        got = suggest(self.svc.store, username, statuses, self.svc.now())
        self._send_json(200, {
            "block_id": got.block_id, "reason": got.reason,
            "class_id": got.class_id, "available": got.available,
            "total": got.total})

    # ---- static assets ----

    def _serve_static(self, path: str):
        root = self.svc.static_dir
        if root is None:
            return self._send_error_code(404, "not_found", "no static assets")
        name = path.lstrip("/") or "index.html"
        target = (root / name).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            # unknown paths fall back to the app shell so client routes work
            target = root / "index.html"
            if not target.is_file():
                return self._send_error_code(404, "not_found", f"no file {path}")
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self._send_raw(200, target.read_bytes(), ctype)


def make_server(service: ParkwatchService, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _Handler)
    server.service = service
    return server
