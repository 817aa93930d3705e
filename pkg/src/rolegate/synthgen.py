"""Persona-driven synthetic phone and desktop traces with ESM answers.

Each participant follows a weekly schedule of private, work and mixed
("both") blocks. Apps, locations, ringer settings and desktop use follow the
active block; prompts come from the scheduler and answered prompts carry the
block's role and the persona's interruptibility for that role.

Per-participant randomness is drawn from ``derive_seed(seed, "participant", i)``
so participants can be generated independently and in any order.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .events import (INTERRUPTIBILITY, ROLES, AppForeground, AppGenre, DeviceEvent, EsmResponse,
                     KeyPress, LocationFix, MouseClick, Notification, PhysicalActivity, RingerMode,
                     ScreenState, hash_contact, merge_streams, parse_esm_log, parse_event_log,
                     serialize_esm, serialize_events)
from .pipeline.seeds import derive_seed
from .scheduler import (DAY, MINUTE, ScheduledPrompt, SchedulerConfig, parse_prompt_log,
                        serialize_prompts, simulate_schedule)

PERSONAS = ("segmenter", "integrator", "combinator_work_permeable", "combinator_private_permeable")

# role -> interruptibility for each boundary-management style
RULES = {
    "segmenter": {"private": "private_only", "work": "work_only", "both": "none"},
    "integrator": {"private": "both", "work": "both", "both": "both"},
    "combinator_work_permeable": {"private": "both", "work": "work_only", "both": "both"},
    "combinator_private_permeable": {"private": "private_only", "work": "both", "both": "both"},
}

# (app, genre) pools; role repertoires are drawn from these per participant
PHONE_APPS = {
    "private": [("com.instagram.android", "social"), ("com.spotify.music", "music"),
                ("com.netflix.mediaclient", "entertainment"), ("com.reddit.frontpage", "social"),
                ("com.king.candycrushsaga", "game"), ("com.zhiliaoapp.musically", "social"),
                ("com.amazon.mShop.android.shopping", "shopping"), ("com.strava", "health"),
                ("com.google.android.youtube", "entertainment"), ("com.duolingo", "education"),
                ("com.facebook.katana", "social"), ("de.zalando.mobile", "shopping")],
    "work": [("com.microsoft.teams", "business"), ("com.slack", "business"),
             ("com.microsoft.office.outlook", "productivity"), ("com.google.android.calendar", "productivity"),
             ("com.microsoft.office.word", "productivity"), ("com.linkedin.android", "business"),
             ("com.atlassian.android.jira.core", "business"), ("us.zoom.videomeetings", "business"),
             ("com.microsoft.office.excel", "productivity"), ("com.salesforce.chatter", "business")],
    "shared": [("com.whatsapp", "communication"), ("com.android.chrome", "communication"),
               ("com.google.android.gm", "communication"), ("org.telegram.messenger", "communication"),
               ("com.google.android.apps.maps", "travel"), ("com.dropbox.android", "productivity"),
               ("com.evernote", "productivity"), ("com.db.pbc.navigator", "travel")],
}
DESKTOP_APPS = {
    "private": [("spotify.exe", "music"), ("steam.exe", "game"), ("vlc.exe", "entertainment"),
                ("discord.exe", "social"), ("photoshop.exe", "creative"), ("epicgameslauncher.exe", "game")],
    "work": [("outlook.exe", "productivity"), ("excel.exe", "productivity"), ("winword.exe", "productivity"),
             ("code.exe", "development"), ("teams.exe", "business"), ("powerpnt.exe", "productivity"),
             ("idea64.exe", "development"), ("sapgui.exe", "business")],
    "shared": [("chrome.exe", "communication"), ("firefox.exe", "communication"),
               ("explorer.exe", "tools"), ("notepad.exe", "tools"), ("acrord32.exe", "tools")],
}
# places near Zurich: home, office and a cafe for mixed blocks (8-digit code cell centres)
ANCHORS = {"private": (47.37625, 8.53875), "work": (47.36875, 8.51625), "both": (47.38125, 8.54125)}
CELL_8 = 0.0025  # edge of an 8-digit code cell in degrees
ANCHOR_SPREAD = 4  # per-participant displacement of the anchors, in cells
LOCATION_JITTER = 0.0008  # stays inside the 8-digit cell around the anchor
EPOCH_DATE = date(2020, 1, 27)  # a Monday
RINGER = {"private": "normal", "work": "vibrate", "both": "vibrate"}
SLEEP_START, SLEEP_END = 23 * 60, 7 * 60  # minutes of local day


class OutOfHorizon(ValueError):
    pass


@dataclass(frozen=True)
class Persona:
    kind: str
    # weekday (0 = Monday) -> ((start_min, end_min, role), ...) covering the local day
    role_schedule: tuple
    # role -> device -> ((app, weight), ...)
    app_repertoire: dict
    location_anchors: dict
    interruptibility_rule: dict
    noise: float = 0.0

    def __post_init__(self):
        if self.kind not in PERSONAS:
            raise ValueError(f"unknown persona {self.kind!r}")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")
        if len(self.role_schedule) != 7:
            raise ValueError("role_schedule needs one entry per weekday")


@dataclass(frozen=True)
class GeneratorConfig:
    participants: int = 16
    days: int = 35
    seed: int = 0
    persona_mix: tuple = PERSONAS
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    answer_rate: float = 0.35
    noise: float = 0.0
    overlap: float = 0.2  # Jaccard overlap of private and work app repertoires
    local_offset: int = 60
    start_date: str = EPOCH_DATE.isoformat()
    contact_salt: str = "synthetic"

    def __post_init__(self):
        if self.participants < 1 or self.days < 1:
            raise ValueError("participants and days must be at least 1")
        if not self.persona_mix or any(p not in PERSONAS for p in self.persona_mix):
            raise ValueError(f"persona_mix entries must be among {PERSONAS}")
        if not 0.0 < self.answer_rate <= 1.0:
            raise ValueError("answer_rate must lie in (0, 1]")
        if not 0.0 <= self.noise <= 1.0 or not 0.0 <= self.overlap < 1.0:
            raise ValueError("noise must lie in [0, 1] and overlap in [0, 1)")
        object.__setattr__(self, "persona_mix", tuple(self.persona_mix))
        if isinstance(self.scheduler, Mapping):
            object.__setattr__(self, "scheduler", SchedulerConfig(**self.scheduler))

    @property
    def start_ts(self) -> int:
        d = date.fromisoformat(self.start_date)
        midnight = datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp()
        return int(midnight * 1000) - self.local_offset * MINUTE

    def to_dict(self) -> dict:
        out = asdict(self)
        out["persona_mix"] = list(self.persona_mix)
        out["scheduler"] = self.scheduler.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "GeneratorConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown generator fields {sorted(unknown)}")
        return cls(**dict(data))


@dataclass(frozen=True)
class Trace:
    """Scheduled role blocks over the horizon, as half-open [start, end) intervals."""
    participant: str
    persona: str
    local_offset: int
    starts: tuple
    ends: tuple
    roles: tuple
    rule: dict

    def to_dict(self) -> dict:
        return {"participant": self.participant, "persona": self.persona,
                "local_offset": self.local_offset, "rule": self.rule,
                "blocks": [[s, e, r] for s, e, r in zip(self.starts, self.ends, self.roles)]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Trace":
        blocks = data["blocks"]
        return cls(data["participant"], data["persona"], data["local_offset"],
                   tuple(b[0] for b in blocks), tuple(b[1] for b in blocks),
                   tuple(b[2] for b in blocks), dict(data["rule"]))


@dataclass
class ParticipantData:
    participant: str
    persona: Persona
    events: list
    esm: list
    prompts: list
    trace: Trace

    @property
    def phone_events(self) -> list:
        return [e for e in self.events if e.device == "phone"]

    @property
    def desktop_events(self) -> list:
        return [e for e in self.events if e.device == "desktop"]


def ground_truth_oracle(trace: Trace, ts: int) -> tuple[str, str]:
    """Scheduled role at ``ts`` and the persona's interruptibility for it."""
    if not trace.starts or ts < trace.starts[0] or ts >= trace.ends[-1]:
        raise OutOfHorizon(f"{ts} outside the generated horizon")
    i = bisect.bisect_right(trace.starts, ts) - 1
    role = trace.roles[i]
    return role, trace.rule[role]


# -- personas -----------------------------------------------------------------

def _weekday_schedule(rng: np.random.Generator) -> tuple:
    q = lambda lo, hi: int(rng.integers(lo // 15, hi // 15 + 1)) * 15  # noqa: E731
    work_start = q(8 * 60, 9 * 60 + 30)
    lunch = q(11 * 60 + 45, 12 * 60 + 30)
    work_end = q(17 * 60, 18 * 60 + 30)
    wind_down = work_end + q(30, 90)
    return ((0, work_start, "private"), (work_start, lunch, "work"), (lunch, lunch + 60, "both"),
            (lunch + 60, work_end, "work"), (work_end, wind_down, "both"), (wind_down, 1440, "private"))


def _weekend_schedule(rng: np.random.Generator, mixed: bool) -> tuple:
    if not mixed:
        return ((0, 1440, "private"),)
    start = int(rng.integers(40, 64)) * 15
    return ((0, start, "private"), (start, start + 90, "both"), (start + 90, 1440, "private"))


def _repertoire(pools: Mapping, rng: np.random.Generator, overlap: float, size: int) -> dict:
    # Jaccard(P, W) = s / (2 * size - s) for s shared apps
    shared_n = min(len(pools["shared"]), int(round(2 * size * overlap / (1 + overlap))))
    picks = lambda pool, n: [pool[i] for i in sorted(rng.choice(len(pool), n, replace=False))]  # noqa: E731
    shared = picks(pools["shared"], shared_n)
    out = {}
    for role in ("private", "work"):
        own = picks(pools[role], min(len(pools[role]), size - shared_n))
        apps = own + shared
        order = rng.permutation(len(apps))
        # Zipf-like popularity over a random ranking
        out[role] = tuple((apps[j][0], 1.0 / (rank + 1)) for rank, j in enumerate(order))
    # mixed blocks draw from both repertoires
    merged: dict[str, float] = {}
    for role in ("private", "work"):
        for app, w in out[role]:
            merged[app] = merged.get(app, 0.0) + w
    out["both"] = tuple(sorted(merged.items()))
    return out


def make_persona(kind: str, rng: np.random.Generator, noise: float = 0.0, overlap: float = 0.2) -> Persona:
    weekday = _weekday_schedule(rng)
    mixed_weekend = kind != "segmenter"
    weekend = _weekend_schedule(rng, mixed_weekend)
    phone = _repertoire(PHONE_APPS, rng, overlap, 8)
    desktop = _repertoire(DESKTOP_APPS, rng, overlap, 5)
    # whole-cell displacement keeps every anchor at the centre of an 8-digit cell
    shift = rng.integers(-ANCHOR_SPREAD, ANCHOR_SPREAD + 1, 2) * CELL_8
    anchors = {r: (round(lat + shift[0], 6), round(lon + shift[1], 6)) for r, (lat, lon) in ANCHORS.items()}
    return Persona(kind=kind, role_schedule=(weekday,) * 5 + (weekend,) * 2,
                   app_repertoire={r: {"phone": phone[r], "desktop": desktop[r]} for r in ROLES},
                   location_anchors=anchors, interruptibility_rule=dict(RULES[kind]), noise=noise)


def app_genres() -> dict[str, str]:
    out = {}
    for pools in (PHONE_APPS, DESKTOP_APPS):
        for apps in pools.values():
            out.update(apps)
    return out


# -- event simulation ---------------------------------------------------------

class _Sim:
    def __init__(self, pid: str, persona: Persona, config: GeneratorConfig, rng: np.random.Generator):
        self.pid, self.p, self.c, self.rng = pid, persona, config, rng
        self.off = config.local_offset
        self.events: list[DeviceEvent] = []
        apps = {a for r in ROLES for dev in ("phone", "desktop") for a, _ in persona.app_repertoire[r][dev]}
        self.genres = {a: g for a, g in app_genres().items() if a in apps}
        self.contacts = {"family": ["mum", "dad", "sister"], "friend": ["alex", "sam", "kim", "robin"],
                         "work": ["boss", "colleague_a", "colleague_b", "client"]}

    def emit(self, ts: float, device: str, kind) -> None:
        self.events.append(DeviceEvent(int(ts), self.off, device, self.pid, kind))

    def pick_app(self, role: str, device: str) -> str:
        if self.p.noise and self.rng.random() < self.p.noise:
            role = [r for r in ROLES if r != role][int(self.rng.integers(2))]
        apps = self.p.app_repertoire[role][device]
        w = np.array([x[1] for x in apps])
        return apps[int(self.rng.choice(len(apps), p=w / w.sum()))][0]

    def location(self, ts: float, role: str) -> None:
        lat, lon = self.p.location_anchors[role]
        j = self.rng.uniform(-LOCATION_JITTER, LOCATION_JITTER, 2)
        self.emit(ts, "phone", LocationFix(round(lat + j[0], 6), round(lon + j[1], 6)))

    def notification(self, ts: float, role: str) -> None:
        rel = {"private": ("family", "friend"), "work": ("work",), "both": ("family", "friend", "work")}[role]
        r = rel[int(self.rng.integers(len(rel)))]
        names = self.contacts[r]
        name = names[int(self.rng.integers(len(names)))]
        app = self.pick_app(role, "phone")
        self.emit(ts, "phone", Notification(app, hash_contact(name, self.c.contact_salt), {r},
                                            int(self.rng.integers(5, 200))))

    def block(self, start: int, end: int, role: str, first: bool) -> None:
        """Events for one scheduled block [start, end) in epoch ms."""
        rng = self.rng
        self.emit(start, "phone", RingerMode(RINGER[role]))
        if not first:
            self.emit(start, "phone", PhysicalActivity("walking" if role != "work" else "in_vehicle"))
        self.location(start, role)
        # background sensing every 10 minutes
        t = start + 10 * MINUTE
        while t < end:
            self.location(t, role)
            if rng.random() < 0.5:
                self.emit(t + 1, "phone", PhysicalActivity(["still", "walking", "still", "tilting"][int(rng.integers(4))]))
            t += 10 * MINUTE
        self.phone_sessions(start, end, role)
        self.desktop(start, end, role)

    def phone_sessions(self, start: int, end: int, role: str) -> None:
        rng = self.rng
        t = start + rng.exponential(8) * MINUTE
        while t < end:
            tod = ((t + self.off * MINUTE) % DAY) / MINUTE
            asleep = tod >= SLEEP_START or tod < SLEEP_END
            if asleep:
                t += rng.exponential(120) * MINUTE
                continue
            length = rng.uniform(10.5, 20) if rng.random() < 0.2 else rng.exponential(3) + 0.3
            stop = min(t + length * MINUTE, end - 1)
            self.emit(t, "phone", ScreenState(True))
            s = t
            while s < stop:
                self.emit(s, "phone", AppForeground(self.pick_app(role, "phone")))
                if rng.random() < 0.25:
                    self.notification(s + 500, role)
                s += rng.uniform(15, 55) * 1000
            self.emit(stop, "phone", ScreenState(False))
            t = stop + rng.exponential(18) * MINUTE

    def desktop(self, start: int, end: int, role: str) -> None:
        rng = self.rng
        weekday = _local_weekday(start, self.off)
        if role == "work" or (role == "both" and weekday < 5 and rng.random() < 0.7):
            active = 1.0
        elif role == "private" and rng.random() < 0.25:
            active = 0.5
        else:
            return
        t = start + rng.uniform(2, 10) * MINUTE
        stop = start + active * (end - start)
        while t < stop:
            tod = ((t + self.off * MINUTE) % DAY) / MINUTE
            if tod >= SLEEP_START or tod < SLEEP_END:
                break
            self.emit(t, "desktop", AppForeground(self.pick_app(role, "desktop")))
            seg = rng.uniform(1, 6) * MINUTE
            self.emit(t + seg / 2, "desktop", KeyPress(int(rng.poisson(60 if role == "work" else 20)),
                                                       int(rng.poisson(8))))
            self.emit(t + seg / 2 + 1, "desktop", MouseClick(int(rng.poisson(12)), int(rng.poisson(1))))
            t += seg
            if rng.random() < 0.1:
                t += rng.exponential(10) * MINUTE  # away from the desk


def _local_weekday(ts: int, offset: int) -> int:
    # EPOCH (1970-01-01) was a Thursday
    return int(((ts + offset * MINUTE) // DAY + 3) % 7)


def _blocks(persona: Persona, start_ts: int, days: int, offset: int) -> list[tuple[int, int, str]]:
    out = []
    for d in range(days):
        day0 = start_ts + d * DAY
        for s, e, role in persona.role_schedule[_local_weekday(day0, offset)]:
            a, b = day0 + s * MINUTE, day0 + e * MINUTE
            if out and out[-1][2] == role and out[-1][1] == a:
                out[-1] = (out[-1][0], b, role)
            else:
                out.append((a, b, role))
    return out


def generate_participant(index: int, config: GeneratorConfig) -> ParticipantData:
    pid = f"P{index + 1:02d}"
    rng = np.random.default_rng(derive_seed(config.seed, "participant", index))
    kind = config.persona_mix[index % len(config.persona_mix)]
    persona = make_persona(kind, rng, config.noise, config.overlap)
    start = config.start_ts
    end = start + config.days * DAY
    blocks = _blocks(persona, start, config.days, config.local_offset)
    trace = Trace(pid, kind, config.local_offset, tuple(b[0] for b in blocks),
                  tuple(b[1] for b in blocks), tuple(b[2] for b in blocks), dict(persona.interruptibility_rule))

    sim = _Sim(pid, persona, config, rng)
    for app, genre in sorted(sim.genres.items()):
        sim.emit(start, "phone", AppGenre(app, genre))
    for i, (a, b, role) in enumerate(blocks):
        sim.block(a, b, role, i == 0)
    events = sorted((e for e in sim.events if e.timestamp < end), key=lambda e: e.timestamp)
    phone = [e for e in events if e.device == "phone"]
    desktop = [e for e in events if e.device == "desktop"]
    events = merge_streams(phone, desktop)

    prompts = simulate_schedule(events, config.scheduler, (start, end - 1), local_offset=config.local_offset)
    desk_ts = [e.timestamp for e in desktop]
    expiry = round(config.scheduler.expiry * MINUTE)
    esm = []
    for p in prompts:
        if rng.random() >= config.answer_rate:
            continue
        answer = p.issue_ts + int(rng.integers(30_000, expiry + 1))
        if answer >= end:
            continue
        p.answered, p.answer_ts = True, answer
        role, _ = ground_truth_oracle(trace, answer)
        role, intr = _label(role, persona, rng)
        # answered at the desk when the desktop was in use during the last few minutes
        j = bisect.bisect_right(desk_ts, answer)
        device = "desktop" if j and answer - desk_ts[j - 1] < 5 * MINUTE and rng.random() < 0.5 else "phone"
        esm.append(EsmResponse(answer, device, pid, role, intr, config.local_offset))
    return ParticipantData(pid, persona, events, esm, prompts, trace)


def _label(role: str, persona: Persona, rng: np.random.Generator) -> tuple[str, str]:
    """Reported role and interruptibility for a scheduled role.

    With probability ``noise`` the person is actually in another role than
    scheduled (unseen by the sensors) and answers for that role; independently,
    with probability ``noise`` the interruptibility answer is replaced by a
    random other class.
    """
    if persona.noise and rng.random() < persona.noise:
        others = [r for r in ROLES if r != role]
        role = others[int(rng.integers(len(others)))]
    intr = persona.interruptibility_rule[role]
    if persona.noise and rng.random() < persona.noise:
        others = [c for c in INTERRUPTIBILITY if c != intr]
        intr = others[int(rng.integers(len(others)))]
    return role, intr


def generate(config: GeneratorConfig) -> list[ParticipantData]:
    return [generate_participant(i, config) for i in range(config.participants)]


# -- files --------------------------------------------------------------------

def write_dataset(data: Sequence[ParticipantData], out_dir: str | Path,
                  config: GeneratorConfig | None = None) -> None:
    """Per participant: phone and desktop event logs, ESM log, prompt log and trace."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for d in data:
        (out / f"{d.participant}.phone.jsonl").write_bytes(serialize_events(d.phone_events))
        (out / f"{d.participant}.desktop.jsonl").write_bytes(serialize_events(d.desktop_events))
        (out / f"{d.participant}.esm.jsonl").write_bytes(serialize_esm(d.esm))
        (out / f"{d.participant}.prompts.jsonl").write_bytes(
            serialize_prompts(d.prompts, d.participant, d.trace.local_offset))
        (out / f"{d.participant}.trace.json").write_text(json.dumps(d.trace.to_dict(), sort_keys=True) + "\n")
    if config is not None:
        (out / "generator.json").write_text(json.dumps(config.to_dict(), sort_keys=True, indent=1) + "\n")


def participants_in(data_dir: str | Path) -> list[str]:
    return sorted(p.name.split(".")[0] for p in Path(data_dir).glob("*.esm.jsonl"))


def load_participant(data_dir: str | Path, pid: str) -> tuple[list[DeviceEvent], list[EsmResponse]]:
    """Merged event stream and ESM answers of one participant from a dataset directory."""
    base = Path(data_dir)
    logs = []
    for dev in ("phone", "desktop"):
        path = base / f"{pid}.{dev}.jsonl"
        logs.append(parse_event_log(path.read_bytes()) if path.exists() else [])
    esm = parse_esm_log((base / f"{pid}.esm.jsonl").read_bytes())
    return merge_streams(*logs), sorted(esm, key=lambda r: r.timestamp)


def load_prompts(data_dir: str | Path, pid: str) -> tuple[list[ScheduledPrompt], int]:
    return parse_prompt_log((Path(data_dir) / f"{pid}.prompts.jsonl").read_bytes())


def load_trace(data_dir: str | Path, pid: str) -> Trace:
    return Trace.from_dict(json.loads((Path(data_dir) / f"{pid}.trace.json").read_text()))


__all__ = ["PERSONAS", "RULES", "Persona", "GeneratorConfig", "Trace", "ParticipantData", "OutOfHorizon",
           "generate", "generate_participant", "ground_truth_oracle", "make_persona", "write_dataset",
           "load_participant", "load_prompts", "load_trace", "participants_in", "app_genres"]
