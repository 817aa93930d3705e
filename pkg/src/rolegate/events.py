"""Multi-device event and ESM label data model, plus line-delimited log I/O.

Logs are UTF-8 JSON lines. Event records carry ``ts`` (epoch ms, UTC),
``off`` (local offset in minutes), ``dev``, ``pid``, ``kind`` and ``payload``;
ESM records carry ``ts``, ``dev``, ``pid``, ``role`` and ``intr``.
"""

from __future__ import annotations

import hashlib
import heapq
import io
import json
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable, Union

log = logging.getLogger(__name__)

DEVICES = ("phone", "desktop")
RELATIONSHIPS = ("family", "friend", "work", "none")
RINGER_MODES = ("silent", "vibrate", "normal")
ACTIVITIES = ("still", "walking", "running", "in_vehicle", "on_bicycle", "tilting", "unknown")
ROLES = ("private", "work", "both")
INTERRUPTIBILITY = ("private_only", "work_only", "both", "none")

# ESM wire values for interruptibility differ from the in-memory labels.
_INTR_TO_WIRE = {"private_only": "private", "work_only": "work", "both": "both", "none": "none"}
_INTR_FROM_WIRE = {v: k for k, v in _INTR_TO_WIRE.items()}

MAX_OFFSET_MIN = 840


class EventError(ValueError):
    pass


class ParticipantMismatch(EventError):
    pass


@dataclass(frozen=True)
class MalformedRecord:
    line: int
    reason: str


class LogParseError(EventError):
    """Raised when too many lines of a log fail to parse."""

    def __init__(self, errors: list[MalformedRecord], n_lines: int):
        self.errors = errors
        self.n_lines = n_lines
        first = "; ".join(f"line {e.line}: {e.reason}" for e in errors[:3])
        super().__init__(f"{len(errors)}/{n_lines} malformed lines ({first})")


# -- event kinds ------------------------------------------------------------

def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise EventError(msg)


def _count(value, name: str) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool) and value >= 0,
             f"{name} must be a non-negative integer")
    return value


@dataclass(frozen=True)
class AppForeground:
    app: str
    TAG = "app_foreground"
    DEVICES = DEVICES

    def __post_init__(self):
        _require(isinstance(self.app, str) and self.app != "", "app must be a non-empty string")


@dataclass(frozen=True)
class Notification:
    app: str
    contact_hash: str | None = None
    relationships: frozenset = frozenset()
    content_length: int = 0
    TAG = "notification"
    DEVICES = DEVICES

    def __post_init__(self):
        _require(isinstance(self.app, str) and self.app != "", "app must be a non-empty string")
        object.__setattr__(self, "relationships", frozenset(self.relationships))
        bad = self.relationships - set(RELATIONSHIPS)
        _require(not bad, f"unknown relationships {sorted(bad)}")
        _count(self.content_length, "content_length")


@dataclass(frozen=True)
class ScreenState:
    on: bool
    TAG = "screen_state"
    DEVICES = DEVICES

    def __post_init__(self):
        _require(isinstance(self.on, bool), "on must be a bool")


@dataclass(frozen=True)
class RingerMode:
    mode: str
    TAG = "ringer_mode"
    DEVICES = ("phone",)

    def __post_init__(self):
        _require(self.mode in RINGER_MODES, f"unknown ringer mode {self.mode!r}")


@dataclass(frozen=True)
class LocationFix:
    lat: float
    lon: float
    TAG = "location_fix"
    DEVICES = ("phone",)

    def __post_init__(self):
        for name, lim in (("lat", 90.0), ("lon", 180.0)):
            v = getattr(self, name)
            _require(isinstance(v, (int, float)) and not isinstance(v, bool) and -lim <= v <= lim,
                     f"{name} out of range")
            object.__setattr__(self, name, float(v))


@dataclass(frozen=True)
class PhysicalActivity:
    activity: str
    TAG = "physical_activity"
    DEVICES = ("phone",)

    def __post_init__(self):
        _require(self.activity in ACTIVITIES, f"unknown activity {self.activity!r}")


@dataclass(frozen=True)
class KeyPress:
    char_keys: int = 0
    control_keys: int = 0
    TAG = "key_press"
    DEVICES = ("desktop",)

    def __post_init__(self):
        _count(self.char_keys, "char_keys")
        _count(self.control_keys, "control_keys")


@dataclass(frozen=True)
class MouseClick:
    left: int = 0
    right: int = 0
    TAG = "mouse_click"
    DEVICES = ("desktop",)

    def __post_init__(self):
        _count(self.left, "left")
        _count(self.right, "right")


@dataclass(frozen=True)
class AppGenre:
    app: str
    genre: str
    TAG = "app_genre"
    DEVICES = DEVICES

    def __post_init__(self):
        _require(isinstance(self.app, str) and self.app != "", "app must be a non-empty string")
        _require(isinstance(self.genre, str), "genre must be a string")


EventKind = Union[AppForeground, Notification, ScreenState, RingerMode, LocationFix,
                  PhysicalActivity, KeyPress, MouseClick, AppGenre]

KIND_BY_TAG: dict[str, type] = {
    k.TAG: k
    for k in (AppForeground, Notification, ScreenState, RingerMode, LocationFix,
              PhysicalActivity, KeyPress, MouseClick, AppGenre)
}


@dataclass(frozen=True)
class DeviceEvent:
    timestamp: int
    local_offset: int
    device: str
    participant: str
    kind: EventKind

    def __post_init__(self):
        _require(isinstance(self.timestamp, int) and not isinstance(self.timestamp, bool)
                 and self.timestamp > 0, "timestamp must be a positive integer")
        _require(isinstance(self.local_offset, int) and abs(self.local_offset) <= MAX_OFFSET_MIN,
                 "local_offset out of range")
        _require(self.device in DEVICES, f"unknown device {self.device!r}")
        _require(isinstance(self.participant, str), "participant must be a string")
        _require(self.device in type(self.kind).DEVICES,
                 f"{type(self.kind).TAG} events cannot come from a {self.device}")

    @property
    def local_ms(self) -> int:
        return self.timestamp + self.local_offset * 60_000


@dataclass(frozen=True)
class EsmResponse:
    timestamp: int
    device: str
    participant: str
    role: str
    interruptibility: str
    local_offset: int | None = None

    def __post_init__(self):
        _require(isinstance(self.timestamp, int) and self.timestamp > 0,
                 "timestamp must be a positive integer")
        _require(self.device in DEVICES, f"unknown device {self.device!r}")
        _require(self.role in ROLES, f"unknown role {self.role!r}")
        _require(self.interruptibility in INTERRUPTIBILITY,
                 f"unknown interruptibility {self.interruptibility!r}")


def hash_contact(name: str, salt: str) -> str:
    """Salted SHA-256 of a contact or group name; raw names never enter a log."""
    return hashlib.sha256(f"{salt}\x00{name}".encode("utf-8")).hexdigest()


# -- serialization ----------------------------------------------------------

def _payload(kind: EventKind) -> dict:
    if isinstance(kind, Notification):
        out = {"app": kind.app, "relationships": sorted(kind.relationships),
               "content_length": kind.content_length}
        if kind.contact_hash is not None:
            out["contact_hash"] = kind.contact_hash
        return out
    return {k: getattr(kind, k) for k in kind.__dataclass_fields__}


def event_to_record(ev: DeviceEvent) -> dict:
    return {"ts": ev.timestamp, "off": ev.local_offset, "dev": ev.device,
            "pid": ev.participant, "kind": type(ev.kind).TAG, "payload": _payload(ev.kind)}


def event_from_record(rec: dict) -> DeviceEvent | None:
    """Build an event from a decoded record; returns None for unknown kind tags."""
    if not isinstance(rec, dict):
        raise EventError("record is not an object")
    try:
        tag = rec["kind"]
        payload = rec.get("payload", {})
        ts, off, dev, pid = rec["ts"], rec.get("off", 0), rec["dev"], rec["pid"]
    except KeyError as exc:
        raise EventError(f"missing field {exc.args[0]}") from None
    cls = KIND_BY_TAG.get(tag)
    if cls is None:
        return None
    if not isinstance(payload, dict):
        raise EventError("payload is not an object")
    try:
        kind = cls(**payload)
    except TypeError as exc:
        raise EventError(f"bad payload for {tag}: {exc}") from None
    return DeviceEvent(ts, off, dev, pid, kind)


def _dumps(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def serialize_events(events: Iterable[DeviceEvent]) -> bytes:
    return "".join(_dumps(event_to_record(e)) + "\n" for e in events).encode("utf-8")


def _lines(stream) -> Iterable[tuple[int, str]]:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        raw = raw.strip()
        if raw:
            yield lineno, raw


def _parse_lines(stream, build, max_malformed: float):
    items, errors, n = [], [], 0
    for lineno, raw in _lines(stream):
        n += 1
        try:
            item = build(json.loads(raw))
        except (json.JSONDecodeError, EventError) as exc:
            errors.append(MalformedRecord(lineno, str(exc)))
            continue
        if item is not None:
            items.append(item)
    if n and len(errors) / n > max_malformed:
        raise LogParseError(errors, n)
    for e in errors:
        log.warning("skipping malformed line %d: %s", e.line, e.reason)
    return items, errors


def parse_event_log(stream: IO | bytes | str, max_malformed: float = 0.10,
                    errors: list[MalformedRecord] | None = None) -> list[DeviceEvent]:
    """Parse an event log into events sorted by timestamp (stable in file order).

    Malformed lines are skipped and appended to ``errors`` when given; the
    whole parse fails with :class:`LogParseError` only when the malformed
    fraction exceeds ``max_malformed``. Unknown kind tags are skipped.
    """
    unknown = 0

    def build(rec):
        nonlocal unknown
        ev = event_from_record(rec)
        if ev is None:
            unknown += 1
        return ev

    events, errs = _parse_lines(stream, build, max_malformed)
    if unknown:
        log.warning("skipped %d records with unknown kind tags", unknown)
    if errors is not None:
        errors.extend(errs)
    events.sort(key=lambda e: e.timestamp)
    return events


def esm_to_record(r: EsmResponse) -> dict:
    rec = {"ts": r.timestamp, "dev": r.device, "pid": r.participant,
           "role": r.role, "intr": _INTR_TO_WIRE[r.interruptibility]}
    if r.local_offset is not None:
        rec["off"] = r.local_offset
    return rec


def esm_from_record(rec: dict) -> EsmResponse:
    if not isinstance(rec, dict):
        raise EventError("record is not an object")
    try:
        intr = _INTR_FROM_WIRE[rec["intr"]]
        return EsmResponse(rec["ts"], rec["dev"], rec["pid"], rec["role"], intr, rec.get("off"))
    except KeyError as exc:
        raise EventError(f"missing or invalid field {exc.args[0]!r}") from None


def serialize_esm(responses: Iterable[EsmResponse]) -> bytes:
    return "".join(_dumps(esm_to_record(r)) + "\n" for r in responses).encode("utf-8")


def parse_esm_log(stream, max_malformed: float = 0.10) -> list[EsmResponse]:
    responses, _ = _parse_lines(stream, esm_from_record, max_malformed)
    responses.sort(key=lambda r: r.timestamp)
    return responses


def merge_streams(phone_log: list[DeviceEvent], desktop_log: list[DeviceEvent]) -> list[DeviceEvent]:
    """Merge two per-device logs of one participant into one timeline.

    Equal timestamps keep phone events ahead of desktop ones.
    """
    pids = {e.participant for e in phone_log} | {e.participant for e in desktop_log}
    if len(pids) > 1:
        raise ParticipantMismatch(f"logs belong to different participants: {sorted(pids)}")
    return list(heapq.merge(phone_log, desktop_log, key=lambda e: e.timestamp))
