"""Feature extraction: app-sequence vectorizers and per-window context features.

Sparse matrices are ``scipy.sparse.csr_matrix`` throughout. Dense context
features are produced as flat ``{name: value}`` rows (numbers, or strings for
categoricals) and turned into columns by :class:`DenseEncoder`, which learns
one-hot category sets and z-score statistics on a training fold only.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .events import (AppForeground, AppGenre, DeviceEvent, KeyPress, LocationFix, MouseClick,
                     Notification, PhysicalActivity, RingerMode, ScreenState)
from .pluscode import encode_pluscode
from .sessionize import LabeledWindow, restrict_window

MODES = ("CV", "TF", "TFIDF")
PARTS_OF_DAY = ("morning", "noon", "afternoon", "evening", "night")
COMMUNICATION = "communication"


class EmptyCorpus(ValueError):
    pass


class RowMismatch(ValueError):
    pass


# -- app sequences ------------------------------------------------------------

@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    n_docs: int
    doc_freq: dict[str, int]

    def __len__(self) -> int:
        return len(self.index)

    @property
    def apps(self) -> list[str]:
        return sorted(self.index, key=self.index.__getitem__)

    def idf(self) -> np.ndarray:
        # Smoothed idf: ubiquitous apps keep weight 1 instead of 0.
        df = np.array([self.doc_freq[a] for a in self.apps], dtype=float)
        return np.log((1.0 + self.n_docs) / (1.0 + df)) + 1.0


def fit_vocabulary(sequences: Sequence[Sequence[str]]) -> Vocabulary:
    if len(sequences) == 0:
        raise EmptyCorpus("cannot fit a vocabulary on zero sequences")
    index: dict[str, int] = {}
    doc_freq: Counter = Counter()
    for seq in sequences:
        for app in seq:
            if app not in index:
                index[app] = len(index)
        doc_freq.update(set(seq))
    return Vocabulary(index, len(sequences), dict(doc_freq))


def vectorize(sequences: Sequence[Sequence[str]], vocab: Vocabulary, mode: str = "CV") -> sp.csr_matrix:
    """Map app sequences onto vocabulary columns.

    CV counts occurrences, TF divides counts by the full sequence length and
    TFIDF multiplies TF by the smoothed idf. Out-of-vocabulary apps get no
    column but still count towards the sequence length.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    rows, cols, vals = [], [], []
    idf = vocab.idf() if mode == "TFIDF" else None
    for r, seq in enumerate(sequences):
        counts = Counter(a for a in seq if a in vocab.index)
        for app in sorted(counts, key=vocab.index.__getitem__):
            c = vocab.index[app]
            v = float(counts[app])
            if mode != "CV":
                v /= len(seq)
            if idf is not None:
                v *= idf[c]
            rows.append(r)
            cols.append(c)
            vals.append(v)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(sequences), len(vocab)), dtype=float)


# -- dense context features ---------------------------------------------------

@dataclass
class DenseFeatures:
    unique_app_count: int = 0
    interaction_time_s: float = 0.0
    char_keys: int = 0
    control_keys: int = 0
    left_clicks: int = 0
    right_clicks: int = 0
    pluscode8_last: str | None = None
    pluscode8_mode: str | None = None
    pluscode10_last: str | None = None
    pluscode10_mode: str | None = None
    unique_activity_count: int = 0
    ringer_change_count: int = 0
    last_ringer_mode: str | None = None
    screen_on_count: int = 0
    screen_off_count: int = 0
    notif_count: int = 0
    notif_unique_apps: int = 0
    notif_family: int = 0
    notif_friend: int = 0
    notif_work: int = 0
    comm_genre_app_count: int = 0
    genre_count: int = 0
    part_of_day: str = "night"
    day_of_week: int = 0
    weekend: str = "no"

    def as_row(self) -> dict:
        return asdict(self)


CATEGORICAL = frozenset({"pluscode8_last", "pluscode8_mode", "pluscode10_last", "pluscode10_mode",
                         "last_ringer_mode", "part_of_day", "weekend"})


def part_of_day(hour: int) -> str:
    if 5 <= hour < 11:
        return "morning"
    if 11 <= hour < 14:
        return "noon"
    if 14 <= hour < 17:
        return "afternoon"
    if 17 <= hour < 22:
        return "evening"
    return "night"


def _mode_earliest(values: list[str]) -> str | None:
    if not values:
        return None
    counts = Counter(values)
    best = max(counts.values())
    return next(v for v in values if counts[v] == best)


def dense_features(window: LabeledWindow, genres: Mapping[str, str] | None = None) -> DenseFeatures:
    """Context features over a window's events and app sequence.

    ``genres`` maps apps to store genres; genre events inside the window are
    merged on top of it.
    """
    evs = window.events
    f = DenseFeatures()
    genre_of = dict(genres or {})
    for e in evs:
        if isinstance(e.kind, AppGenre):
            genre_of[e.kind.app] = e.kind.genre

    apps = window.apps
    f.interaction_time_s = float(sum(d for _, d in window.sequence))
    f.unique_app_count = len(set(apps))

    codes8, codes10, activities, notif_apps, all_apps = [], [], set(), set(), set(apps)
    for e in evs:
        k = e.kind
        if isinstance(k, KeyPress):
            f.char_keys += k.char_keys
            f.control_keys += k.control_keys
        elif isinstance(k, MouseClick):
            f.left_clicks += k.left
            f.right_clicks += k.right
        elif isinstance(k, LocationFix):
            code10 = encode_pluscode(k.lat, k.lon, 10)
            codes10.append(code10)
            codes8.append(code10[:9])
        elif isinstance(k, PhysicalActivity):
            activities.add(k.activity)
        elif isinstance(k, RingerMode):
            f.ringer_change_count += 1
            f.last_ringer_mode = k.mode
        elif isinstance(k, ScreenState):
            if k.on:
                f.screen_on_count += 1
            else:
                f.screen_off_count += 1
        elif isinstance(k, Notification):
            f.notif_count += 1
            notif_apps.add(k.app)
            all_apps.add(k.app)
            f.notif_family += "family" in k.relationships
            f.notif_friend += "friend" in k.relationships
            f.notif_work += "work" in k.relationships
    f.notif_unique_apps = len(notif_apps)
    f.unique_activity_count = len(activities)
    if codes10:
        f.pluscode10_last, f.pluscode8_last = codes10[-1], codes8[-1]
        f.pluscode10_mode, f.pluscode8_mode = _mode_earliest(codes10), _mode_earliest(codes8)
    f.comm_genre_app_count = sum(1 for a in all_apps if genre_of.get(a) == COMMUNICATION)
    f.genre_count = len({genre_of[a] for a in set(apps) if a in genre_of})

    f.part_of_day, f.day_of_week, f.weekend = _temporal(window)
    return f


def _temporal(window: LabeledWindow) -> tuple[str, int, str]:
    local = datetime.fromtimestamp((window.end_ts + window.local_offset * 60_000) / 1000, tz=timezone.utc)
    return part_of_day(local.hour), local.weekday(), "yes" if local.weekday() >= 5 else "no"


def combine_device_features(phone_row: Mapping | None, desktop_row: Mapping | None,
                            template: Mapping | None = None) -> dict:
    """Concatenate per-device rows under ``phone.``/``desktop.`` prefixes.

    A missing device contributes zeros (``None`` for categoricals) and a
    presence flag of 0. ``template`` supplies the field names when a row is
    missing; by default the :class:`DenseFeatures` fields are used.
    """
    if template is None:
        template = phone_row or desktop_row or DenseFeatures().as_row()
    out: dict = {}
    for prefix, row in (("phone", phone_row), ("desktop", desktop_row)):
        for name, value in template.items():
            if row is not None:
                out[f"{prefix}.{name}"] = row[name]
            else:
                out[f"{prefix}.{name}"] = None if isinstance(value, str) or value is None else 0
    out["phone_present"] = int(phone_row is not None)
    out["desktop_present"] = int(desktop_row is not None)
    return out


def window_dense_row(window: LabeledWindow, genres: Mapping[str, str] | None = None,
                     stopwords: frozenset | None = None) -> dict:
    """The dense feature row used by the pipeline for a window's device scope."""
    if window.device_scope == "combined":
        rows = {}
        for dev in ("phone", "desktop"):
            sub = restrict_window(window, dev, stopwords)
            rows[dev] = dense_features(sub, genres).as_row() if sub.events else None
        out = combine_device_features(rows["phone"], rows["desktop"])
        # time of the answer is known even when neither device saw any events
        out["part_of_day"], out["day_of_week"], out["weekend"] = _temporal(window)
        return out
    row = dense_features(window, genres).as_row()
    row[f"{window.device_scope}_present"] = int(bool(window.events))
    return row


@dataclass
class DenseEncoder:
    """One-hot encodes categoricals and (optionally) z-scores numeric columns.

    Fitted on training rows; categories unseen at fit time encode as all zeros.
    """
    numeric: list[str] = field(default_factory=list)
    categories: dict[str, list[str]] = field(default_factory=dict)
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    @classmethod
    def fit(cls, rows: Sequence[Mapping]) -> "DenseEncoder":
        if not rows:
            return cls()
        names = list(rows[0])
        numeric, cats = [], {}
        for name in names:
            values = [r[name] for r in rows]
            if any(isinstance(v, str) for v in values) or all(v is None for v in values):
                cats[name] = sorted({v for v in values if v is not None})
            else:
                numeric.append(name)
        X = np.array([[float(r[n]) for n in numeric] for r in rows], dtype=float).reshape(len(rows), -1)
        std = X.std(axis=0)
        std[std == 0] = 1.0
        return cls(numeric, cats, X.mean(axis=0), std)

    @property
    def columns(self) -> list[str]:
        cols = list(self.numeric)
        for name, values in self.categories.items():
            cols.extend(f"{name}={v}" for v in values)
        return cols

    def transform(self, rows: Sequence[Mapping], standardize: bool = False) -> sp.csr_matrix:
        X = np.array([[float(r[n] or 0) for n in self.numeric] for r in rows], dtype=float)
        X = X.reshape(len(rows), len(self.numeric))
        if standardize and self.mean is not None and len(self.numeric):
            X = (X - self.mean) / self.std
        blocks = [sp.csr_matrix(X)]
        for name, values in self.categories.items():
            pos = {v: i for i, v in enumerate(values)}
            r_idx, c_idx = [], []
            for i, r in enumerate(rows):
                j = pos.get(r[name])
                if j is not None:
                    r_idx.append(i)
                    c_idx.append(j)
            blocks.append(sp.csr_matrix((np.ones(len(r_idx)), (r_idx, c_idx)),
                                        shape=(len(rows), len(values))))
        out = sp.hstack(blocks, format="csr") if blocks else sp.csr_matrix((len(rows), 0))
        out.eliminate_zeros()
        return out


def combine(sparse: sp.spmatrix, dense: sp.spmatrix | np.ndarray) -> sp.csr_matrix:
    """Append dense feature columns to a sparse sequence matrix."""
    if sparse.shape[0] != dense.shape[0]:
        raise RowMismatch(f"{sparse.shape[0]} sparse rows vs {dense.shape[0]} dense rows")
    out = sp.hstack([sp.csr_matrix(sparse), sp.csr_matrix(dense)], format="csr")
    out.eliminate_zeros()
    return out


# -- triplet export ------------------------------------------------------------

def write_triplets(X: sp.spmatrix, path: str | Path, columns: Sequence[str] | None = None) -> None:
    """Write ``n d`` then ``row col value`` lines; values use repr() so they round-trip."""
    X = sp.coo_matrix(X)
    order = np.lexsort((X.col, X.row))
    lines = [f"{X.shape[0]} {X.shape[1]}"]
    lines += [f"{X.row[i]} {X.col[i]} {float(X.data[i])!r}" for i in order if X.data[i] != 0]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if columns is not None:
        Path(str(path) + ".columns").write_text("\n".join(columns) + "\n", encoding="utf-8")


def read_triplets(path: str | Path) -> tuple[sp.csr_matrix, list[str] | None]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    n, d = map(int, lines[0].split())
    rows, cols, vals = [], [], []
    for line in lines[1:]:
        if line.strip():
            r, c, v = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(v))
    X = sp.csr_matrix((vals, (rows, cols)), shape=(n, d), dtype=float)
    cpath = Path(str(path) + ".columns")
    columns = cpath.read_text(encoding="utf-8").splitlines() if cpath.exists() else None
    return X, columns
