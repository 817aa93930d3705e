"""Acceptance criteria 1-10, one test each; every test records a pass/fail line."""

from __future__ import annotations

import itertools
import math
import time
from collections import Counter

import numpy as np
import pytest

from rolegate.experiment import ExperimentConfig, run_experiment
from rolegate.features import fit_vocabulary, vectorize
from rolegate.pipeline import (EvalReport, EvalSettings, ModelEntry, build_units, compare_scores,
                               decode_interrupt_pair, decode_role_pair, encode_interruptibility, encode_role,
                               evaluate, paired_t_test, weighted_f1)
from rolegate.pluscode import encode_pluscode
from rolegate.scheduler import SchedulerConfig, check_constraints, simulate_schedule
from rolegate.synthgen import GeneratorConfig, generate

from conftest import local_ts, random_stream, record

INTR = ("private_only", "work_only", "both", "none")
ROLES = ("private", "work", "both")


def _mean(scores: dict) -> float:
    return float(np.mean(list(scores.values())))


# -- 1. encodings -----------------------------------------------------------------------

def test_criterion_01_encoding_bijections():
    t0 = time.perf_counter()
    ok = all(decode_interrupt_pair(encode_interruptibility(c)) == c for c in INTR)
    ok &= len({encode_interruptibility(c) for c in INTR}) == 4
    ok &= {decode_interrupt_pair(p) for p in itertools.product([False, True], repeat=2)} == set(INTR)
    ok &= all(decode_role_pair(encode_role(r), fb) == r for r in ROLES for fb in ROLES)
    ok &= all(decode_role_pair((False, False), fb) == fb for fb in ROLES)
    took = time.perf_counter() - t0
    record(1, ok and took < 1.0, f"4 + 3 classes round-trip, (F,F) -> fallback; {took * 1000:.1f} ms")


# -- 2. vectorizers ------------------------------------------------------------------------

def _oracle(seqs, mode):
    # independent dense counting: vocabulary in first-occurrence order
    vocab = list(dict.fromkeys(a for s in seqs for a in s))
    n = len(seqs)
    out = np.zeros((n, len(vocab)))
    for i, s in enumerate(seqs):
        for j, a in enumerate(vocab):
            c = s.count(a)
            if mode == "CV":
                out[i, j] = c
                continue
            tf = c / len(s) if s else 0.0
            if mode == "TFIDF":
                df = sum(a in t for t in seqs)
                tf *= math.log((1 + n) / (1 + df)) + 1
            out[i, j] = tf
    return out


def test_criterion_02_vectorizer_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    alphabet = [f"app{i:02d}" for i in range(50)]
    seqs = [[alphabet[j] for j in rng.integers(0, 50, int(rng.integers(0, 41)))] for _ in range(100)]
    vocab = fit_vocabulary(seqs)
    errs = {}
    for mode in ("CV", "TF", "TFIDF"):
        errs[mode] = float(np.abs(vectorize(seqs, vocab, mode).toarray() - _oracle(seqs, mode)).max())
    took = time.perf_counter() - t0
    ok = errs["CV"] == 0.0 and errs["TF"] <= 1e-9 and errs["TFIDF"] <= 1e-9 and took < 5
    record(2, ok, f"max |diff| CV={errs['CV']:g} TF={errs['TF']:.1e} TFIDF={errs['TFIDF']:.1e}; {took:.2f} s")


# -- 3. weighted F1 --------------------------------------------------------------------------

def _confusion_f1(y_true, y_pred):
    labels = sorted(set(y_true) | set(y_pred))
    pos = {c: i for i, c in enumerate(labels)}
    M = np.zeros((len(labels), len(labels)))
    for t, p in zip(y_true, y_pred):
        M[pos[t], pos[p]] += 1
    out = 0.0
    for i in range(len(labels)):
        tp, pred, true = M[i, i], M[:, i].sum(), M[i, :].sum()
        prec = tp / pred if pred else 0.0
        rec = tp / true if true else 0.0
        out += true / len(y_true) * (2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return out


def test_criterion_03_weighted_f1():
    t0 = time.perf_counter()
    fixtures = abs(weighted_f1(list("aabb"), list("abbb")) - 11 / 15) <= 1e-9
    fixtures &= abs(weighted_f1(["a", "b"], ["a", "a"]) - 1 / 3) <= 1e-9
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        n, k = int(rng.integers(1, 40)), int(rng.integers(1, 6))
        yt = [f"c{v}" for v in rng.integers(0, k, n)]
        yp = [f"c{v}" for v in rng.integers(0, k, n)]
        worst = max(worst, abs(weighted_f1(yt, yp) - _confusion_f1(yt, yp)))
    took = time.perf_counter() - t0
    record(3, fixtures and worst <= 1e-9 and took < 5,
           f"11/15 and 1/3 fixtures, 1000 brute-force cases max diff {worst:.1e}; {took:.2f} s")


# -- 4. statistics --------------------------------------------------------------------------

def test_criterion_04_statistics():
    t0 = time.perf_counter()
    r = paired_t_test([1, 2, 3], [2, 4, 6])
    ok = abs(r.t - (-3.4641)) <= 1e-4 and r.df == 2
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(2, 20))
        a, b = rng.random(n), rng.random(n)
        ab, ba = paired_t_test(a, b), paired_t_test(b, a)
        ok &= math.isclose(ab.t, -ba.t, rel_tol=1e-12) and math.isclose(ab.p, ba.p, rel_tol=1e-12)
        same = paired_t_test(a, a.copy())
        ok &= same.t == 0.0 and same.p == 1.0
    took = time.perf_counter() - t0
    record(4, ok and took < 5, f"t={r.t:.4f} df={r.df}; 200 antisymmetry and a==b pairs; {took:.2f} s")


# -- 5. scheduler ------------------------------------------------------------------------------

def test_criterion_05_scheduler_soundness():
    t0 = time.perf_counter()
    cfg = SchedulerConfig()
    assert (cfg.min_gap, cfg.expiry) == (30, 10)
    rng = np.random.default_rng(5)
    bad = prompts = 0
    for _ in range(1000):
        offset = int(rng.choice([-480, -300, 0, 60, 120, 330, 600]))
        start = local_ts(2021, 3, 1, int(rng.integers(0, 24)), 0, offset)
        events = random_stream(rng, start, days=1.0, offset=offset)
        out = simulate_schedule(events, cfg, (start, start + 24 * 3_600_000), local_offset=offset)
        for p in out:
            if rng.random() < 0.4:
                p.answered, p.answer_ts = True, p.issue_ts + int(rng.integers(0, 600_001))
        prompts += len(out)
        bad += len(check_constraints(out, cfg, offset))
    took = time.perf_counter() - t0
    record(5, bad == 0 and took < 30, f"1000 streams, {prompts} prompts, {bad} violations; {took:.1f} s")


# -- 6. pluscode ---------------------------------------------------------------------------------

VECTORS = [
    (47.365590, 8.524997, 10, "8FVC9G8F+6X"),
    (20.3700625, 2.7821875, 10, "7FG49QCJ+2V"),
    (47.0000625, 8.0000625, 10, "8FVC2222+22"),
    (-41.2730625, 174.7859375, 10, "4VCPPQGP+Q9"),
    (-89.9999375, -179.9999375, 10, "22222222+22"),
    (20.375, 2.775, 6, "7FG49Q00+"),
    (0.5, 179.5, 4, "6VGX0000+"),
    (90, 1, 4, "CFX30000+"),
    (1, 180, 4, "62H20000+"),
]


def test_criterion_06_pluscode():
    t0 = time.perf_counter()
    hits = sum(encode_pluscode(lat, lon, n) == code for lat, lon, n, code in VECTORS)
    rng = np.random.default_rng(6)
    prefix = all(encode_pluscode(la, lo, 8) == encode_pluscode(la, lo, 10)[:9]
                 for la, lo in zip(rng.uniform(-90, 90, 1000), rng.uniform(-180, 180, 1000)))
    took = time.perf_counter() - t0
    record(6, hits == len(VECTORS) and prefix and took < 5,
           f"{hits}/{len(VECTORS)} published vectors, prefix property on 1000 points; {took:.2f} s")


# -- 7 and 8. qualitative replication on the shared synthetic suite ------------------------------

SUITE_SEEDS = (1, 2, 3, 4, 5)
FOREST = ModelEntry.make("forest")


@pytest.fixture(scope="module")
def replication_suite():
    """16 participants x 35 days, mixed personas, noise 0.1, five seeds; units pooled over seeds."""
    t0 = time.perf_counter()
    pooled: dict = {}
    per_seed: dict = {}
    for seed in SUITE_SEEDS:
        data = generate(GeneratorConfig(participants=16, days=35, noise=0.1, seed=seed))
        units = build_units({d.participant: d.events for d in data}, {d.participant: d.esm for d in data},
                            ["combined"])
        settings = EvalSettings(("features", "features_plus_roles"), (FOREST,),
                                ("interruptibility", "two_stage"), seed=seed)
        report = EvalReport.build(evaluate(units, settings), {})
        per_seed[seed] = report.scores
        for arm, scores in report.scores.items():
            for unit, f1 in scores.items():
                pooled.setdefault(arm, {})[(seed, *unit)] = f1
    return pooled, per_seed, time.perf_counter() - t0


FEATURES = ("interruptibility", "features", "forest")
ORACLE = ("interruptibility", "features_plus_roles", "forest")
TWO_STAGE = ("two_stage", "features", "forest")
TWO_STAGE_ORACLE = ("two_stage_oracle", "features", "forest")


def test_criterion_07_oracle_roles_beat_features(replication_suite):
    pooled, per_seed, took = replication_suite
    c = compare_scores(pooled[FEATURES], pooled[ORACLE])
    direction = {s: _mean(sc[ORACLE]) - _mean(sc[FEATURES]) for s, sc in per_seed.items()}
    ok = c.p < 0.05 and c.t < 0 and all(v > 0 for v in direction.values()) and took < 300
    gains = " ".join(f"{v:+.3f}" for v in direction.values())
    record(7, ok, f"features {c.mean_a:.3f} vs oracle roles {c.mean_b:.3f}, n={c.n}, t={c.t:.2f}, "
                  f"p={c.p:.1e}; per-seed gains {gains}; suite {took:.0f} s")


def test_criterion_08_two_stage(replication_suite):
    pooled, per_seed, took = replication_suite
    c = compare_scores(pooled[FEATURES], pooled[TWO_STAGE])
    two = _mean(pooled[TWO_STAGE])
    oracle = min(_mean(pooled[ORACLE]), _mean(pooled[TWO_STAGE_ORACLE]))
    ok = c.p < 0.05 and c.t < 0 and two <= oracle + 0.03 and took < 300
    record(8, ok, f"features {c.mean_a:.3f} vs two-stage {c.mean_b:.3f}, n={c.n}, t={c.t:.2f}, p={c.p:.1e}; "
                  f"two-stage {two:.3f} <= oracle {oracle:.3f} + 0.03")


# -- 9. model sanity ---------------------------------------------------------------------------------

def _scores(config: GeneratorConfig, models, target, seed):
    data = generate(config)
    units = build_units({d.participant: d.events for d in data}, {d.participant: d.esm for d in data},
                        ["combined"])
    settings = EvalSettings(("features",), tuple(ModelEntry.make(m) for m in models), (target,), seed=seed)
    report = EvalReport.build(evaluate(units, settings), {})
    return {m: _mean(report.scores[(target, "features", m)]) for m in models}


def test_criterion_09_model_sanity():
    t0 = time.perf_counter()
    tree, forest = [], []
    for seed in range(10):
        s = _scores(GeneratorConfig(participants=8, days=21, noise=0.2, seed=seed), ("tree", "forest"),
                    "interruptibility", seed)
        tree.append(s["tree"])
        forest.append(s["forest"])
    learners = ("tree", "forest", "knn", "logistic", "ridge", "adaboost")
    clean = _scores(GeneratorConfig(participants=8, days=21, noise=0.0, seed=0), ("baseline",) + learners,
                    "role", 0)
    margins = {m: clean[m] - clean["baseline"] for m in learners}
    took = time.perf_counter() - t0
    ok = np.mean(forest) >= np.mean(tree) and min(margins.values()) >= 0.2 and took < 120
    worst = min(margins, key=margins.get)
    record(9, ok, f"forest {np.mean(forest):.3f} >= tree {np.mean(tree):.3f} over 10 seeds; "
                  f"baseline {clean['baseline']:.3f}, smallest margin {worst} +{margins[worst]:.3f}; {took:.0f} s")


# -- 10. determinism ------------------------------------------------------------------------------------

def test_criterion_10_determinism(tmp_path):
    t0 = time.perf_counter()
    config = ExperimentConfig.from_dict({
        "synth": {"participants": 4, "days": 10, "noise": 0.1},
        "feature_sets": ["features", "features_plus_roles", "features_plus_appseq"],
        "models": ["forest", "knn", "baseline"],
        "device_scopes": ["phone", "desktop", "combined"],
        "seed": 10,
    })
    run_experiment(config, tmp_path / "a")
    run_experiment(config, tmp_path / "b")
    names = ("report.json", "report.txt", "results.csv", "manifest.json")
    same = [n for n in names if (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()]
    rows = Counter(line.split(",")[2] for line in (tmp_path / "a" / "results.csv").read_text().splitlines()[1:])
    took = time.perf_counter() - t0
    record(10, len(same) == len(names) and took < 120,
           f"{len(same)}/{len(names)} files byte-identical across two runs ({sum(rows.values())} fold rows); "
           f"{took:.0f} s")
