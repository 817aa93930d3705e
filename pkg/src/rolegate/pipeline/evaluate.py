"""Per-participant cross-validated evaluation of the feature sets, learners and targets."""

from __future__ import annotations

from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..events import AppGenre, DeviceEvent, EsmResponse
from ..learners import SCALE_SENSITIVE, ModelSpec, train
from ..sessionize import LabeledWindow, StopwordList, extract_labeled_windows
from .design import FEATURE_SETS, FeatureBuilder, WindowTable, window_table, with_roles
from .encoding import decode_interrupt_pair, decode_role_pair, encode_interruptibility, encode_role
from .metrics import FoldAssignment, TooFewSamples, stratified_kfold, weighted_f1
from .seeds import derive_seed
from .twostage import fit_two_stage, most_common_role, predict_matrix

TARGETS = ("interruptibility", "role", "two_stage")
# extra rows recorded alongside the requested targets
DERIVED_TARGETS = {
    "interruptibility": ("interrupt_private", "interrupt_work"),
    "role": ("role_private", "role_work"),
    "two_stage": ("two_stage_oracle",),
}


@dataclass(frozen=True)
class ModelEntry:
    name: str
    family: str
    params: tuple = ()

    @classmethod
    def make(cls, family: str, name: str | None = None, params: Mapping | None = None) -> "ModelEntry":
        return cls(name or family, family, tuple(sorted((params or {}).items())))

    def spec(self, seed: int) -> ModelSpec:
        return ModelSpec(self.family, dict(self.params), seed)


@dataclass(frozen=True)
class EvalSettings:
    feature_sets: tuple[str, ...]
    models: tuple[ModelEntry, ...]
    targets: tuple[str, ...] = TARGETS
    k: int = 3
    seed: int = 0
    appseq_mode: str = "TFIDF"
    role_feature_encoding: str = "both"

    def __post_init__(self):
        if not self.feature_sets:
            raise ValueError("at least one feature set is required")
        if not self.models:
            raise ValueError("at least one model is required")
        for fs in self.feature_sets:
            if fs not in FEATURE_SETS:
                raise ValueError(f"unknown feature set {fs!r}")
        for t in self.targets:
            if t not in TARGETS:
                raise ValueError(f"unknown target {t!r}")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ValueError("model names must be unique")


@dataclass(frozen=True)
class FoldResult:
    participant: str
    device_scope: str
    target: str
    feature_set: str
    model: str
    fold: int
    f1: float
    n_train: int
    n_test: int

    @property
    def arm(self) -> tuple[str, str, str]:
        return (self.target, self.feature_set, self.model)

    @property
    def unit(self) -> tuple[str, str]:
        return (self.participant, self.device_scope)


@dataclass
class UnitResult:
    """Everything evaluated for one (participant, device scope)."""
    participant: str
    device_scope: str
    n_windows: int
    folds: dict[str, list[int]] = field(default_factory=dict)
    training_only: dict[str, list[str]] = field(default_factory=dict)
    rows: list[FoldResult] = field(default_factory=list)
    skipped: str | None = None


def genre_catalog(events: Iterable[DeviceEvent]) -> dict[str, str]:
    """App -> genre from a participant's genre records; the latest record wins."""
    return {e.kind.app: e.kind.genre for e in events if isinstance(e.kind, AppGenre)}


def build_units(events: Mapping[str, Sequence[DeviceEvent]], esm: Mapping[str, Sequence[EsmResponse]],
                scopes: Sequence[str], stopwords: frozenset | None = None):
    """(participant, scope) -> (windows, genre catalog) for every participant with ESM answers."""
    if stopwords is None:
        stopwords = StopwordList.default()
    units = {}
    for pid in sorted(esm):
        evs = events.get(pid, [])
        genres = genre_catalog(evs)
        for scope in scopes:
            units[(pid, scope)] = (extract_labeled_windows(evs, esm[pid], stopwords, scope), genres)
    return units


def _bits(labels, encode) -> np.ndarray:
    return np.array([encode(x) for x in labels], dtype=bool).reshape(-1, 2)


class _Unit:
    """Fold loop for one participant and scope."""

    def __init__(self, table: WindowTable, settings: EvalSettings, key: tuple[str, str]):
        self.table = table
        self.s = settings
        self.key = key

    def seed(self, *keys) -> int:
        return derive_seed(self.s.seed, *self.key, *keys)

    def run(self, result: UnitResult) -> None:
        s = self.s
        kinds = {"interruptibility": self.table.interruptibility, "role": self.table.roles}
        needs = {"role"} & set(s.targets)
        if {"interruptibility", "two_stage"} & set(s.targets):
            needs.add("interruptibility")
        assignments: dict[str, FoldAssignment] = {}
        for kind in sorted(needs):
            try:
                assignments[kind] = stratified_kfold(kinds[kind], s.k, self.seed("folds", kind))
            except TooFewSamples as exc:
                result.skipped = str(exc)
                return
            result.folds[kind] = list(assignments[kind].folds)
            result.training_only[kind] = sorted(map(str, assignments[kind].training_only))

        for kind, fa in sorted(assignments.items()):
            for fold in range(s.k):
                test = fa.test_indices(fold)
                if len(test) == 0:
                    continue
                train_ = fa.train_indices(fold)
                tr, te = self.table.take(train_), self.table.take(test)
                for fs in s.feature_sets:
                    for entry in s.models:
                        result.rows.extend(self._cell(kind, fold, fs, entry, tr, te))

    def _cell(self, kind, fold, fs, entry, tr, te):
        s = self.s
        builder = FeatureBuilder(fs, s.appseq_mode, entry.family in SCALE_SENSITIVE).fit(tr)
        Xtr, Xte = builder.transform(tr), builder.transform(te)
        if builder.uses_roles:
            Xtr = with_roles(Xtr, tr.roles, s.role_feature_encoding)
            Xte = with_roles(Xte, te.roles, s.role_feature_encoding)
        out = []

        def row(target, y_true, y_pred):
            return FoldResult(*self.key, target, fs, entry.name, fold,
                              weighted_f1(list(y_true), list(y_pred)), len(tr), len(te))

        def fit(target, y):
            return train(entry.spec(self.seed(fs, entry.name, target, fold)), Xtr, list(y))

        if kind == "interruptibility" and "interruptibility" in s.targets:
            if entry.family == "baseline":
                pred = fit("interruptibility", tr.interruptibility).predict(Xte)
                pb = _bits(pred, encode_interruptibility)
            else:
                bits = _bits(tr.interruptibility, encode_interruptibility)
                pb = np.column_stack([fit("interrupt_private", bits[:, 0]).predict(Xte),
                                      fit("interrupt_work", bits[:, 1]).predict(Xte)]).astype(bool)
                pred = [decode_interrupt_pair(tuple(p)) for p in pb]
            tb = _bits(te.interruptibility, encode_interruptibility)
            out.append(row("interruptibility", te.interruptibility, pred))
            out.append(row("interrupt_private", tb[:, 0], pb[:, 0]))
            out.append(row("interrupt_work", tb[:, 1], pb[:, 1]))

        if kind == "interruptibility" and "two_stage" in s.targets and not builder.uses_roles:
            spec = entry.spec(self.seed(fs, entry.name, "two_stage", fold))
            model = fit_two_stage(Xtr, tr.roles, tr.interruptibility, spec, s.role_feature_encoding)
            pred, _ = predict_matrix(model, Xte)
            oracle, _ = predict_matrix(model, Xte, te.roles)
            out.append(row("two_stage", te.interruptibility, pred))
            out.append(row("two_stage_oracle", te.interruptibility, oracle))

        if kind == "role" and "role" in s.targets and not builder.uses_roles:
            if entry.family == "baseline":
                pred = fit("role", tr.roles).predict(Xte)
                pb = _bits(pred, encode_role)
            else:
                bits = _bits(tr.roles, encode_role)
                pb = np.column_stack([fit("role_private", bits[:, 0]).predict(Xte),
                                      fit("role_work", bits[:, 1]).predict(Xte)]).astype(bool)
                fallback = most_common_role(tr.roles)
                pred = [decode_role_pair(tuple(p), fallback) for p in pb]
            tb = _bits(te.roles, encode_role)
            out.append(row("role", te.roles, pred))
            out.append(row("role_private", tb[:, 0], pb[:, 0]))
            out.append(row("role_work", tb[:, 1], pb[:, 1]))
        return out


def evaluate_unit(participant: str, scope: str, windows: Sequence[LabeledWindow],
                  settings: EvalSettings, genres: Mapping[str, str] | None = None,
                  stopwords: frozenset | None = None) -> UnitResult:
    result = UnitResult(participant, scope, len(windows))
    if not windows:
        result.skipped = "no labeled windows"
        return result
    table = window_table(windows, genres, stopwords)
    _Unit(table, settings, (participant, scope)).run(result)
    return result


def _evaluate_task(args):
    return evaluate_unit(*args)


def evaluate(units: Mapping[tuple[str, str], tuple[Sequence[LabeledWindow], Mapping[str, str]]],
             settings: EvalSettings, jobs: int = 1, stopwords: frozenset | None = None) -> list[UnitResult]:
    """Evaluate every unit; results come back in sorted key order whatever ``jobs`` is."""
    keys = sorted(units)
    tasks = [(pid, scope, units[(pid, scope)][0], settings, units[(pid, scope)][1], stopwords)
             for pid, scope in keys]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_evaluate_task, tasks))
    return [_evaluate_task(t) for t in tasks]


def participant_scores(results: Iterable[UnitResult]) -> dict[tuple[str, str, str], dict[tuple[str, str], float]]:
    """arm (target, feature set, model) -> unit (participant, scope) -> mean F1 over folds."""
    acc: dict = defaultdict(lambda: defaultdict(list))
    for r in results:
        for row in r.rows:
            acc[row.arm][row.unit].append(row.f1)
    return {arm: {u: float(np.mean(v)) for u, v in sorted(units.items())}
            for arm, units in sorted(acc.items())}
