"""Evaluation reports: per-participant scores, paired comparisons, text/JSON/CSV output."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .evaluate import FoldResult, UnitResult, participant_scores
from .stats import cohens_d, paired_t_test

ALPHA = 0.05
Arm = tuple  # (target, feature set, model)


class KeyMismatch(ValueError):
    """Two arms cannot be paired because their participant/scope keys differ."""


@dataclass(frozen=True)
class Comparison:
    label: str
    arm_a: Arm
    arm_b: Arm
    n: int
    mean_a: float
    sd_a: float
    mean_b: float
    sd_b: float
    t: float
    p: float
    df: int
    d_z: float
    d_av: float
    zero_variance: bool
    alpha: float = ALPHA

    @property
    def significant(self) -> bool:
        return self.p < self.alpha


def compare_scores(a: Mapping, b: Mapping, label: str = "", arm_a: Arm = (), arm_b: Arm = (),
                   alpha: float = ALPHA) -> Comparison:
    """Paired comparison of two unit -> score maps over identical key sets (d = a - b)."""
    if set(a) != set(b):
        missing = sorted(set(a) ^ set(b))
        raise KeyMismatch(f"unpaired keys: {missing[:5]}")
    keys = sorted(a)
    xa = np.array([a[k] for k in keys], dtype=float)
    xb = np.array([b[k] for k in keys], dtype=float)
    tt = paired_t_test(xa, xb)
    eff = cohens_d(xa, xb)
    return Comparison(label, tuple(arm_a), tuple(arm_b), len(keys), float(xa.mean()),
                      float(xa.std(ddof=1)), float(xb.mean()), float(xb.std(ddof=1)),
                      tt.t, tt.p, tt.df, eff.d_z, eff.d_av, tt.zero_variance, alpha)


def default_comparisons(scores: Mapping[Arm, Mapping]) -> list[tuple[str, Arm, Arm]]:
    """Comparisons run for every model: roles vs features, two-stage vs features, classified vs oracle roles."""
    out = []
    models = sorted({arm[2] for arm in scores})
    for m in models:
        pairs = [
            ("features vs features_plus_roles", ("interruptibility", "features", m),
             ("interruptibility", "features_plus_roles", m)),
            ("features vs two_stage", ("interruptibility", "features", m), ("two_stage", "features", m)),
            ("two_stage vs two_stage_oracle", ("two_stage", "features", m),
             ("two_stage_oracle", "features", m)),
        ]
        if m != "baseline":
            for arm in sorted(scores):
                if arm[0] == "role" and arm[2] == m and ("role", arm[1], "baseline") in scores:
                    pairs.append((f"baseline vs {m} (role, {arm[1]})", ("role", arm[1], "baseline"), arm))
        out += [(label, a, b) for label, a, b in pairs if a in scores and b in scores]
    return out


@dataclass
class EvalReport:
    settings: dict
    units: list[dict]
    rows: list[FoldResult]
    scores: dict = field(default_factory=dict)
    comparisons: list[Comparison] = field(default_factory=list)

    @classmethod
    def build(cls, results: Sequence[UnitResult], settings: Mapping,
              comparisons: Iterable[tuple[str, Arm, Arm]] | None = None) -> "EvalReport":
        rows = [r for u in results for r in u.rows]
        units = [{"participant": u.participant, "device_scope": u.device_scope,
                  "n_windows": u.n_windows, "folds": u.folds, "training_only": u.training_only,
                  "skipped": u.skipped} for u in results]
        scores = participant_scores(results)
        report = cls(dict(settings), units, rows, scores)
        specs = default_comparisons(scores) if comparisons is None else comparisons
        for label, a, b in specs:
            a, b = tuple(a), tuple(b)
            shared = sorted(set(scores.get(a, {})) & set(scores.get(b, {})))
            if len(shared) < 2:
                continue
            report.comparisons.append(compare_scores({k: scores[a][k] for k in shared},
                                                     {k: scores[b][k] for k in shared}, label, a, b))
        return report

    def arm_scores(self, target: str, feature_set: str, model: str) -> dict:
        return self.scores.get((target, feature_set, model), {})

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "settings": self.settings,
            "units": self.units,
            "scores": [{"target": a[0], "feature_set": a[1], "model": a[2],
                        "participant": u[0], "device_scope": u[1], "f1": f1}
                       for a, per_unit in sorted(self.scores.items()) for u, f1 in per_unit.items()],
            "folds": [asdict(r) for r in self.rows],
            "comparisons": [{**asdict(c), "arm_a": list(c.arm_a), "arm_b": list(c.arm_b)}
                            for c in self.comparisons],
        }

    def to_json(self) -> str:
        return json.dumps(_finite(self.to_dict()), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvalReport":
        scores: dict = {}
        for s in data["scores"]:
            arm = (s["target"], s["feature_set"], s["model"])
            scores.setdefault(arm, {})[(s["participant"], s["device_scope"])] = _unfinite(s["f1"])
        comps = [Comparison(**{**c, "arm_a": tuple(c["arm_a"]), "arm_b": tuple(c["arm_b"]),
                               **{k: _unfinite(c[k]) for k in ("t", "d_z", "d_av")}})
                 for c in data.get("comparisons", [])]
        return cls(dict(data["settings"]), list(data["units"]),
                   [FoldResult(**r) for r in data["folds"]], scores, comps)

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        path = Path(path)
        if path.is_dir():
            path = path / "report.json"
        return cls.from_dict(json.loads(path.read_text()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["participant", "device_scope", "target", "feature_set", "model", "fold", "f1"])
        for r in self.rows:
            w.writerow([r.participant, r.device_scope, r.target, r.feature_set, r.model, r.fold,
                        f"{r.f1:.6f}"])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = ["Weighted F1 per participant (mean over folds)", ""]
        for arm, per_unit in sorted(self.scores.items()):
            vals = np.array(list(per_unit.values()))
            lines.append(f"[{arm[0]} | {arm[1]} | {arm[2]}]  n={len(vals)}  "
                         f"M={vals.mean():.4f}  SD={_sd(vals):.4f}")
            for (pid, scope), f1 in per_unit.items():
                lines.append(f"  {pid:<12} {scope:<9} {f1:.4f}")
            lines.append("")
        skipped = [u for u in self.units if u["skipped"]]
        if skipped:
            lines.append("Skipped units")
            for u in skipped:
                lines.append(f"  {u['participant']:<12} {u['device_scope']:<9} {u['skipped']}")
            lines.append("")
        lines.append(format_comparisons(self.comparisons))
        return "\n".join(lines)

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        (out / "report.txt").write_text(self.to_text())
        (out / "results.csv").write_text(self.to_csv())


def compare_reports(a: EvalReport, b: EvalReport, alpha: float = ALPHA) -> list[Comparison]:
    """One paired comparison per arm present in both reports, pairing by participant and scope."""
    shared = sorted(set(a.scores) & set(b.scores))
    if not shared:
        raise KeyMismatch("the reports have no (target, feature set, model) arm in common")
    out = []
    for arm in shared:
        label = " | ".join(arm)
        out.append(compare_scores(a.scores[arm], b.scores[arm], label, arm, arm, alpha))
    return out


def format_comparisons(comparisons: Sequence[Comparison]) -> str:
    """Table of paired tests: variable, M (SD) of both arms, t, p, effect sizes and alpha."""
    if not comparisons:
        return "Paired comparisons\n  (none)\n"
    head = (f"{'Variable':<48} {'n':>3} {'M_a (SD)':>16} {'M_b (SD)':>16} {'t':>9} {'p':>8} "
            f"{'d_z':>7} {'d_av':>7}  alpha")
    lines = ["Paired comparisons (d = a - b, two-tailed)", head, "-" * len(head)]
    for c in comparisons:
        mark = "*" if c.significant else " "
        flag = "  zero variance" if c.zero_variance else ""
        lines.append(f"{c.label:<48} {c.n:>3} {c.mean_a:>7.4f} ({c.sd_a:.4f}) "
                     f"{c.mean_b:>7.4f} ({c.sd_b:.4f}) {_num(c.t, 9, 3)} {c.p:>7.4f}{mark} "
                     f"{_num(c.d_z, 7, 2)} {_num(c.d_av, 7, 2)}  {c.alpha:g}{flag}")
    return "\n".join(lines) + "\n"


def _sd(vals: np.ndarray) -> float:
    return float(vals.std(ddof=1)) if len(vals) > 1 else 0.0


def _num(x: float, width: int, digits: int) -> str:
    if math.isnan(x):
        return f"{'nan':>{width}}"
    if math.isinf(x):
        return f"{'+inf' if x > 0 else '-inf':>{width}}"
    return f"{x:>{width}.{digits}f}"


def _finite(obj):
    # JSON has no inf/nan literals; keep them as strings so the file stays standard
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _unfinite(x):
    return float(x) if isinstance(x, str) else x
