"""ESM prompt scheduling: a simulator for the study's prompting rules and an auditor.

Fixed prompts fire every ``fixed_interval`` minutes after the last issued
prompt; interaction prompts fire once a continuous phone-interaction session
runs longer than ``interaction_trigger`` minutes. Nothing is issued in quiet
hours (fixed prompts due then are deferred to ``quiet_end``) and consecutive
prompts are at least ``min_gap`` apart. One min-gap clock is shared by both
devices of a participant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import time
from typing import Iterable, Sequence

from .events import AppForeground, DeviceEvent, ScreenState

MINUTE = 60_000
DAY = 24 * 60 * MINUTE


class UnsortedInput(ValueError):
    pass


@dataclass(frozen=True)
class SchedulerConfig:
    fixed_interval: float = 90
    interaction_trigger: float = 10
    expiry: float = 10
    quiet_start: time = time(22, 0)
    quiet_end: time = time(7, 0)
    min_gap: float = 30
    interaction_gap_tolerance: float = 60  # seconds

    def __post_init__(self):
        for name in ("fixed_interval", "interaction_trigger", "expiry", "min_gap",
                     "interaction_gap_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.min_gap > self.fixed_interval:
            raise ValueError("min_gap must not exceed fixed_interval")
        for name in ("quiet_start", "quiet_end"):
            if isinstance(getattr(self, name), str):
                h, m = getattr(self, name).split(":")
                object.__setattr__(self, name, time(int(h), int(m)))

    @property
    def active_window_ms(self) -> tuple[int, int]:
        """Allowed local time-of-day range [start, end) in ms since midnight."""
        def ms(t: time) -> int:
            return (t.hour * 60 + t.minute) * MINUTE + t.second * 1000
        return ms(self.quiet_end), ms(self.quiet_start)

    def to_dict(self) -> dict:
        return {"fixed_interval": self.fixed_interval,
                "interaction_trigger": self.interaction_trigger,
                "expiry": self.expiry,
                "quiet_start": self.quiet_start.strftime("%H:%M"),
                "quiet_end": self.quiet_end.strftime("%H:%M"),
                "min_gap": self.min_gap,
                "interaction_gap_tolerance": self.interaction_gap_tolerance}


@dataclass
class ScheduledPrompt:
    issue_ts: int
    trigger: str
    expiry_ts: int
    answered: bool = False
    answer_ts: int | None = None


@dataclass(frozen=True)
class Violation:
    kind: str  # "min_gap" | "quiet_hours" | "expiry"
    index: int
    detail: str


def in_active_hours(ts: int, local_offset: int, config: SchedulerConfig) -> bool:
    start, end = config.active_window_ms
    tod = (ts + local_offset * MINUTE) % DAY
    if start <= end:
        return start <= tod < end
    return tod >= start or tod < end


def next_active(ts: int, local_offset: int, config: SchedulerConfig) -> int:
    """Earliest instant >= ts outside quiet hours."""
    if in_active_hours(ts, local_offset, config):
        return ts
    start, _ = config.active_window_ms
    local = ts + local_offset * MINUTE
    tod = local % DAY
    delta = start - tod if tod < start else DAY - tod + start
    return ts + delta


def _is_interaction(ev: DeviceEvent) -> bool:
    if ev.device != "phone":
        return False
    k = ev.kind
    return isinstance(k, AppForeground) or (isinstance(k, ScreenState) and k.on)


def _ends_session(ev: DeviceEvent) -> bool:
    return ev.device == "phone" and isinstance(ev.kind, ScreenState) and not ev.kind.on


def simulate_schedule(events: Sequence[DeviceEvent], config: SchedulerConfig,
                      horizon: tuple[int, int], *, local_offset: int | None = None,
                      last_prompt_ts: int | None = None) -> list[ScheduledPrompt]:
    """Issue prompts over ``horizon = (start_ms, end_ms)``, both ends inclusive.

    ``last_prompt_ts`` anchors the fixed clock; without it the horizon start
    acts as the previous prompt. The local offset for quiet hours defaults to
    the first event's offset (0 without events). Prompts come back unanswered.
    """
    start, end = horizon
    if any(events[i].timestamp > events[i + 1].timestamp for i in range(len(events) - 1)):
        raise UnsortedInput("events must be sorted by timestamp")
    if local_offset is None:
        local_offset = events[0].local_offset if events else 0

    interval = round(config.fixed_interval * MINUTE)
    min_gap = round(config.min_gap * MINUTE)
    trigger = round(config.interaction_trigger * MINUTE)
    tolerance = round(config.interaction_gap_tolerance * 1000)
    expiry = round(config.expiry * MINUTE)

    prompts: list[ScheduledPrompt] = []
    last = start if last_prompt_ts is None else last_prompt_ts

    def issue(ts: int, kind: str) -> None:
        nonlocal last
        prompts.append(ScheduledPrompt(ts, kind, ts + expiry))
        last = ts

    def flush_fixed(until: int) -> None:
        # Fixed prompts strictly before `until`; an event at `until` is handled after.
        while True:
            due = next_active(last + interval, local_offset, config)
            if due >= until or due > end:
                return
            issue(due, "fixed")

    session_start = session_last = None
    for ev in events:
        t = ev.timestamp
        if t < start:
            continue
        if t > end:
            break
        flush_fixed(t)
        if _ends_session(ev):
            session_start = session_last = None
            continue
        if not _is_interaction(ev):
            continue
        if session_last is None or t - session_last > tolerance:
            session_start = t
        session_last = t
        if (t - session_start > trigger and t - last >= min_gap
                and in_active_hours(t, local_offset, config)):
            issue(t, "interaction")
            session_start = t
    flush_fixed(end + 1)
    return prompts


def check_constraints(prompts: Sequence[ScheduledPrompt], config: SchedulerConfig,
                      local_offset: int = 0) -> list[Violation]:
    """List every min-gap, quiet-hour and expiry violation in a prompt log."""
    out: list[Violation] = []
    min_gap = config.min_gap * MINUTE
    expiry = config.expiry * MINUTE
    for i, p in enumerate(prompts):
        if i and p.issue_ts - prompts[i - 1].issue_ts < min_gap:
            gap = (p.issue_ts - prompts[i - 1].issue_ts) / MINUTE
            out.append(Violation("min_gap", i, f"{gap:g} min after previous prompt"))
        if not in_active_hours(p.issue_ts, local_offset, config):
            out.append(Violation("quiet_hours", i, "issued during quiet hours"))
        if p.answered:
            if p.answer_ts is None or not p.issue_ts <= p.answer_ts <= p.issue_ts + expiry:
                late = "missing" if p.answer_ts is None else f"{(p.answer_ts - p.issue_ts) / MINUTE:g} min"
                out.append(Violation("expiry", i, f"answer time {late}"))
    return out


# -- prompt logs ------------------------------------------------------------

def prompt_to_record(p: ScheduledPrompt, participant: str, device: str = "phone",
                     local_offset: int = 0) -> dict:
    return {"ts": p.issue_ts, "off": local_offset, "dev": device, "pid": participant,
            "kind": "prompt",
            "payload": {"trigger": p.trigger, "expiry_ts": p.expiry_ts,
                        "answered": p.answered, "answer_ts": p.answer_ts}}


def serialize_prompts(prompts: Iterable[ScheduledPrompt], participant: str,
                      local_offset: int = 0, devices: Sequence[str] | None = None) -> bytes:
    lines = []
    for i, p in enumerate(prompts):
        dev = devices[i] if devices is not None else "phone"
        rec = prompt_to_record(p, participant, dev, local_offset)
        lines.append(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
    return "".join(lines).encode("utf-8")


def parse_prompt_log(stream) -> tuple[list[ScheduledPrompt], int]:
    """Read a prompt log; returns the prompts and the local offset of the first record."""
    if isinstance(stream, (bytes, bytearray)):
        stream = stream.decode("utf-8").splitlines()
    prompts, offset = [], None
    for raw in stream:
        raw = raw.strip() if isinstance(raw, str) else raw.decode("utf-8").strip()
        if not raw:
            continue
        rec = json.loads(raw)
        if rec.get("kind") != "prompt":
            continue
        pl = rec["payload"]
        if offset is None:
            offset = rec.get("off", 0)
        prompts.append(ScheduledPrompt(rec["ts"], pl["trigger"], pl["expiry_ts"],
                                       bool(pl.get("answered", False)), pl.get("answer_ts")))
    return prompts, offset or 0
