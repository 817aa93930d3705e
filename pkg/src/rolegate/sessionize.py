"""Turn event streams plus ESM answers into labeled 15-minute windows."""

from __future__ import annotations

import bisect
import functools
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .events import AppForeground, DeviceEvent, EsmResponse
from .scheduler import UnsortedInput

WINDOW_MS = 15 * 60_000
SCOPES = ("phone", "desktop", "combined")


@dataclass(frozen=True)
class LabeledWindow:
    participant: str
    device_scope: str
    end_ts: int
    sequence: tuple[tuple[str, float], ...]
    events: tuple[DeviceEvent, ...]
    role: str
    interruptibility: str
    local_offset: int = 0
    esm_device: str = "phone"
    overlaps_previous: bool = False

    @property
    def start_ts(self) -> int:
        return self.end_ts - WINDOW_MS

    @property
    def apps(self) -> list[str]:
        return [app for app, _ in self.sequence]


class StopwordList(frozenset):
    """Set of app identifiers dropped from sequences."""

    @classmethod
    def parse(cls, text: str) -> "StopwordList":
        apps = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                apps.append(line)
        return cls(apps)

    @classmethod
    def load(cls, path: str | Path) -> "StopwordList":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> "StopwordList":
        return _default_stopwords()


@functools.lru_cache(maxsize=1)
def _default_stopwords() -> StopwordList:
    text = resources.files("rolegate.data").joinpath("stopwords.txt").read_text("utf-8")
    return StopwordList.parse(text)


def group_consecutive(app_events: Sequence[tuple[str, int]], window_end: int) -> list[tuple[str, int]]:
    """Collapse repeated foreground reports of the same app into timed runs.

    A run lasts until the next run starts; the last run is closed at
    ``window_end``. Durations come back in the units of the timestamps.
    """
    runs: list[list] = []
    prev_ts = None
    for app, ts in app_events:
        if prev_ts is not None and ts < prev_ts:
            raise UnsortedInput("app events must be sorted by timestamp")
        prev_ts = ts
        if runs and runs[-1][0] == app:
            continue
        runs.append([app, ts])
    out = []
    for i, (app, ts) in enumerate(runs):
        stop = runs[i + 1][1] if i + 1 < len(runs) else max(window_end, ts)
        out.append((app, stop - ts))
    return out


def remove_stopwords(runs: Iterable[tuple[str, float]], stopwords: frozenset) -> list[tuple[str, float]]:
    # Surviving neighbours are not re-merged: the removed run was real time elsewhere.
    return [r for r in runs if r[0] not in stopwords]


def app_sequence(events: Iterable[DeviceEvent], window_end: int,
                 stopwords: frozenset) -> tuple[tuple[str, float], ...]:
    """Grouped, stopword-filtered (app, seconds) runs of the foreground events."""
    app_events = [(e.kind.app, e.timestamp) for e in events if isinstance(e.kind, AppForeground)]
    runs = group_consecutive(app_events, window_end)
    return tuple(remove_stopwords(((a, d / 1000.0) for a, d in runs), stopwords))


def restrict_window(window: LabeledWindow, device: str, stopwords: frozenset | None = None) -> LabeledWindow:
    """The single-device view of a (combined) window."""
    if stopwords is None:
        stopwords = StopwordList.default()
    events = tuple(e for e in window.events if e.device == device)
    return replace(window, device_scope=device, events=events,
                   sequence=app_sequence(events, window.end_ts, stopwords))


def _in_scope(ev: DeviceEvent, scope: str) -> bool:
    return scope == "combined" or ev.device == scope


def extract_labeled_windows(events: Sequence[DeviceEvent], esm_responses: Sequence[EsmResponse],
                            stopwords: frozenset | None = None,
                            device_scope: str = "combined") -> list[LabeledWindow]:
    """Build one window per answered ESM over the 15 minutes before the answer.

    Every event with ``start <= ts <= end`` that belongs to ``device_scope``
    goes into the window; foreground-app events become the app sequence.
    """
    if device_scope not in SCOPES:
        raise ValueError(f"unknown device scope {device_scope!r}")
    if stopwords is None:
        stopwords = StopwordList.default()
    stamps = [e.timestamp for e in events]
    if any(stamps[i] > stamps[i + 1] for i in range(len(stamps) - 1)):
        raise UnsortedInput("events must be sorted by timestamp")

    windows = []
    prev_end = None
    for r in esm_responses:
        end = r.timestamp
        lo = bisect.bisect_left(stamps, end - WINDOW_MS)
        hi = bisect.bisect_right(stamps, end)
        sliced = tuple(e for e in events[lo:hi] if _in_scope(e, device_scope))
        if r.local_offset is not None:
            offset = r.local_offset
        elif hi:
            offset = events[hi - 1].local_offset
        else:
            offset = 0
        windows.append(LabeledWindow(
            participant=r.participant, device_scope=device_scope, end_ts=end,
            sequence=app_sequence(sliced, end, stopwords), events=sliced, role=r.role,
            interruptibility=r.interruptibility, local_offset=offset, esm_device=r.device,
            overlaps_previous=prev_end is not None and end - WINDOW_MS < prev_end,
        ))
        prev_end = end
    return windows
