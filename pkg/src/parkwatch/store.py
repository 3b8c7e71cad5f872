"""File-backed registry: accounts, sessions, class catalog, blocks, videos.

One JSON document plus a trailing CRC32 line is the whole database. All
mutating operations hold the store lock; persistence snapshots under the
lock and writes through a temp file so readers never see a torn store.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import secrets
import tempfile
import threading
import zlib
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path

PBKDF2_ALGORITHM = "pbkdf2_sha256"
PBKDF2_ITERATIONS = 100_000
SALT_BYTES = 16
SESSION_LIFETIME = timedelta(days=14)
DAY_ORDER = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")

COMMON_PASSWORDS = tuple(
    (resources.files("parkwatch") / "data" / "common_passwords.txt")
    .read_text().split())

_LOGIN_FAILED = "invalid username or password"


class UsernameTaken(ValueError):
    pass


class PasswordTooShort(ValueError):
    pass


class PasswordSimilarToUsername(ValueError):
    pass


class PasswordTooCommon(ValueError):
    pass


class PasswordAllNumeric(ValueError):
    pass


class InvalidCredentials(ValueError):
    """Single error for unknown user and wrong password alike."""


class SessionInvalid(ValueError):
    pass


class SessionExpired(ValueError):
    pass


class UnknownUser(ValueError):
    pass


class UnknownClass(ValueError):
    pass


class UnknownBlock(ValueError):
    pass


class NoVideoRegistered(ValueError):
    pass


class CorruptStore(ValueError):
    """Store file fails its checksum or does not match the schema."""


@dataclass(frozen=True)
class DigestRecord:
    algorithm: str
    iterations: int
    salt: bytes
    digest: bytes


@dataclass(frozen=True)
class UserAccount:
    username: str
    password_digest: DigestRecord
    created_at: datetime


@dataclass(frozen=True)
class Session:
    token: str
    username: str
    expires_at: datetime


@dataclass(frozen=True)
class ClassEntry:
    class_id: str
    title: str
    days: tuple[str, ...]
    start_time: int
    end_time: int
    home_block: str

    def __post_init__(self):
        object.__setattr__(self, "days", tuple(
            sorted(set(self.days), key=DAY_ORDER.index)
            if set(self.days) <= set(DAY_ORDER) else self.days))
        if not set(self.days) <= set(DAY_ORDER):
            raise ValueError(f"days must be drawn from {DAY_ORDER}")
        if not 0 <= self.start_time < self.end_time <= 24 * 60:
            raise ValueError("class times must satisfy 0 <= start < end <= 1440")


@dataclass(frozen=True)
class VideoRecord:
    record_id: int
    block_id: str
    frames_path: str
    slot_map_path: str
    reference_path: str
    registered_at: datetime


@dataclass(frozen=True)
class Block:
    block_id: str
    display_name: str
    slot_map_path: str


def _utcnow(now: datetime | None) -> datetime:
    return now if now is not None else datetime.now(timezone.utc)


def check_password_policy(username: str, password: str) -> None:
    """The four account rules, applied in documented order."""
    if len(password) < 8:
        raise PasswordTooShort("password must contain at least 8 characters")
    u, p = username.lower(), password.lower()
    if u in p or p in u:
        raise PasswordSimilarToUsername("password must not be similar to the username")
    if p in COMMON_PASSWORDS:
        raise PasswordTooCommon("password is too common")
    if password.isdigit():
        raise PasswordAllNumeric("password cannot contain all numbers")


class Store:
    """In-memory registry with single-writer locking and JSON persistence."""

    def __init__(self):
        self._lock = threading.RLock()
        self.users: dict[str, UserAccount] = {}
        self.sessions: dict[str, Session] = {}
        self.classes: dict[str, ClassEntry] = {}
        self.schedules: dict[str, dict[str, bool]] = {}
        self.blocks: dict[str, Block] = {}
        self.videos: list[VideoRecord] = []
        self.next_record_id = 1

    def _state(self):
        return (self.users, self.sessions, self.classes, self.schedules,
                self.blocks, self.videos, self.next_record_id)

    def __eq__(self, other):
        return isinstance(other, Store) and self._state() == other._state()

    # ---- accounts and sessions ----

    def create_user(self, username: str, password: str,
                    now: datetime | None = None) -> UserAccount:
        with self._lock:
            if not 1 <= len(username) <= 64:
                raise ValueError("username must be 1..64 characters")
            if username in self.users:
                raise UsernameTaken(f"username {username!r} is taken")
            check_password_policy(username, password)
            salt = secrets.token_bytes(SALT_BYTES)
            digest = hashlib.pbkdf2_hmac("sha256", password.encode(), salt,
                                         PBKDF2_ITERATIONS)
            user = UserAccount(username,
                               DigestRecord(PBKDF2_ALGORITHM, PBKDF2_ITERATIONS,
                                            salt, digest),
                               _utcnow(now))
            self.users[username] = user
            return user

    def login(self, username: str, password: str,
              now: datetime | None = None) -> Session:
        with self._lock:
            user = self.users.get(username)
            if user is None:
                raise InvalidCredentials(_LOGIN_FAILED)
            rec = user.password_digest
            candidate = hashlib.pbkdf2_hmac("sha256", password.encode(),
                                            rec.salt, rec.iterations)
            if not hmac.compare_digest(candidate, rec.digest):
                raise InvalidCredentials(_LOGIN_FAILED)
            session = Session(secrets.token_hex(16), username,
                              _utcnow(now) + SESSION_LIFETIME)
            self.sessions[session.token] = session
            return session

    def validate_session(self, token: str, now: datetime | None = None) -> str:
        session = self.sessions.get(token)
        if session is None:
            raise SessionInvalid("no such session")
        if _utcnow(now) >= session.expires_at:
            raise SessionExpired("session has expired")
        return session.username

    # ---- catalog and schedules ----

    def add_block(self, block: Block) -> None:
        with self._lock:
            if block.block_id in self.blocks:
                raise ValueError(f"block {block.block_id!r} already exists")
            self.blocks[block.block_id] = block

    def add_class(self, entry: ClassEntry) -> None:
        with self._lock:
            if entry.class_id in self.classes:
                raise ValueError(f"class {entry.class_id!r} already exists")
            if entry.home_block not in self.blocks:
                raise UnknownBlock(f"home block {entry.home_block!r} does not exist")
            self.classes[entry.class_id] = entry

    def set_schedule(self, username: str, selections: dict[str, bool]) -> None:
        with self._lock:
            if username not in self.users:
                raise UnknownUser(f"no user {username!r}")
            for class_id in selections:
                if class_id not in self.classes:
                    raise UnknownClass(f"no class {class_id!r} in the catalog")
            self.schedules[username] = dict(selections)

    def enrolled_classes(self, username: str) -> list[str]:
        if username not in self.users:
            raise UnknownUser(f"no user {username!r}")
        selections = self.schedules.get(username, {})
        return sorted(cid for cid, enrolled in selections.items() if enrolled)

    # ---- video registry ----

    def register_video(self, block_id: str, frames_path: str, reference_path: str,
                       now: datetime | None = None) -> VideoRecord:
        with self._lock:
            block = self.blocks.get(block_id)
            if block is None:
                raise UnknownBlock(f"no block {block_id!r}")
            record = VideoRecord(self.next_record_id, block_id, frames_path,
                                 block.slot_map_path, reference_path, _utcnow(now))
            self.next_record_id += 1
            self.videos.append(record)
            return record

    def latest_video(self, block_id: str) -> VideoRecord:
        if block_id not in self.blocks:
            raise UnknownBlock(f"no block {block_id!r}")
        mine = [r for r in self.videos if r.block_id == block_id]
        if not mine:
            raise NoVideoRegistered(f"no video registered for block {block_id!r}")
        return max(mine, key=lambda r: r.record_id)

    # ---- seeding ----

    def load_seed(self, path: str | Path) -> None:
        """Ensure the blocks and classes of a seed document exist.

        Entries whose ids are already present are left untouched, so the
        same seed can be applied again to a store resumed from disk.
        """
        doc = json.loads(Path(path).read_text())
        with self._lock:
            for entry in doc.get("blocks", ()):
                if entry["block_id"] not in self.blocks:
                    self.add_block(Block(entry["block_id"], entry["display_name"],
                                         entry["slot_map_path"]))
            for entry in doc.get("classes", ()):
                if entry["class_id"] not in self.classes:
                    self.add_class(ClassEntry(
                        entry["class_id"], entry["title"], tuple(entry["days"]),
                        entry["start_time"], entry["end_time"],
                        entry["home_block"]))


def _store_to_doc(store: Store) -> dict:
    return {
        "users": [
            {"username": u.username,
             "algorithm": u.password_digest.algorithm,
             "iterations": u.password_digest.iterations,
             "salt": u.password_digest.salt.hex(),
             "digest": u.password_digest.digest.hex(),
             "created_at": u.created_at.isoformat()}
            for u in store.users.values()
        ],
        "sessions": [
            {"token": s.token, "username": s.username,
             "expires_at": s.expires_at.isoformat()}
            for s in store.sessions.values()
        ],
        "classes": [
            {"class_id": c.class_id, "title": c.title, "days": list(c.days),
             "start_time": c.start_time, "end_time": c.end_time,
             "home_block": c.home_block}
            for c in store.classes.values()
        ],
        "schedules": [
            {"username": username, "class_id": class_id, "enrolled": enrolled}
            for username, selections in store.schedules.items()
            for class_id, enrolled in selections.items()
        ],
        "blocks": [
            {"block_id": b.block_id, "display_name": b.display_name,
             "slot_map_path": b.slot_map_path}
            for b in store.blocks.values()
        ],
        "videos": [
            {"record_id": v.record_id, "block_id": v.block_id,
             "frames_path": v.frames_path, "slot_map_path": v.slot_map_path,
             "reference_path": v.reference_path,
             "registered_at": v.registered_at.isoformat()}
            for v in store.videos
        ],
        "next_record_id": store.next_record_id,
    }


def _store_from_doc(doc: dict) -> Store:
    store = Store()
    for u in doc["users"]:
        store.users[u["username"]] = UserAccount(
            u["username"],
            DigestRecord(u["algorithm"], u["iterations"],
                         bytes.fromhex(u["salt"]), bytes.fromhex(u["digest"])),
            datetime.fromisoformat(u["created_at"]))
    for s in doc["sessions"]:
        store.sessions[s["token"]] = Session(
            s["token"], s["username"], datetime.fromisoformat(s["expires_at"]))
    for c in doc["classes"]:
        store.classes[c["class_id"]] = ClassEntry(
            c["class_id"], c["title"], tuple(c["days"]),
            c["start_time"], c["end_time"], c["home_block"])
    for entry in doc["schedules"]:
        store.schedules.setdefault(entry["username"], {})[entry["class_id"]] = \
            entry["enrolled"]
    for b in doc["blocks"]:
        store.blocks[b["block_id"]] = Block(
            b["block_id"], b["display_name"], b["slot_map_path"])
    for v in doc["videos"]:
        store.videos.append(VideoRecord(
            v["record_id"], v["block_id"], v["frames_path"], v["slot_map_path"],
            v["reference_path"], datetime.fromisoformat(v["registered_at"])))
    store.next_record_id = doc["next_record_id"]
    return store


def persist_store(store: Store, path: str | Path) -> None:
    """Atomic write: JSON body, then a #crc32 line over the body bytes."""
    path = Path(path)
    with store._lock:
        body = json.dumps(_store_to_doc(store), separators=(",", ":")) + "\n"
    data = body.encode()
    data += b"#crc32:%08x\n" % zlib.crc32(data)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load_store(path: str | Path) -> Store:
    """Read a store file back, verifying the checksum line first."""
    raw = Path(path).read_bytes()
    head, sep, tail = raw.rpartition(b"#crc32:")
    if not sep or len(tail.strip()) != 8:
        raise CorruptStore("store file has no checksum line")
    try:
        expected = int(tail.strip(), 16)
    except ValueError as e:
        raise CorruptStore("store checksum is not hexadecimal") from e
    if zlib.crc32(head) != expected:
        raise CorruptStore("store checksum mismatch")
    try:
        doc = json.loads(head.decode())
        return _store_from_doc(doc)
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptStore(f"store body does not match schema: {e}") from e
