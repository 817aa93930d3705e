from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from rolegate.learners import ModelSpec, train
from rolegate.pipeline import (ROLE_ENCODINGS, Comparison, EvalReport, EvalSettings, FeatureBuilder, KeyMismatch,
                               ModelEntry, TooFewSamples, TwoStageModel, ZeroVariance, build_units,
                               cohens_d, cohens_dav, cohens_dz, compare_reports, compare_scores,
                               decode_interrupt_pair, decode_role_pair, derive_seed, encode_interruptibility,
                               encode_role, evaluate, evaluate_unit, fit_two_stage, most_common_role,
                               paired_t_test, predict_matrix, predict_two_stage, role_feature_names,
                               role_features, stratified_kfold, train_two_stage, weighted_f1, window_table,
                               with_roles)
from rolegate.pipeline.metrics import EmptyInput
from rolegate.sessionize import extract_labeled_windows

INTR = ("private_only", "work_only", "both", "none")
ROLES = ("private", "work", "both")


# -- encodings ---------------------------------------------------------------------

def test_interruptibility_encoding():
    assert encode_interruptibility("both") == (True, True)
    assert encode_interruptibility("none") == (False, False)
    assert decode_interrupt_pair((False, False)) == "none"
    for c in INTR:
        assert decode_interrupt_pair(encode_interruptibility(c)) == c
    assert {decode_interrupt_pair(p) for p in itertools.product([False, True], repeat=2)} == set(INTR)


def test_role_encoding():
    assert decode_role_pair((True, True), "private") == "both"
    assert decode_role_pair((False, False), "private") == "private"
    assert decode_role_pair((False, False), "work") == "work"
    for r in ROLES:
        for fb in ROLES:
            assert decode_role_pair(encode_role(r), fb) == r
    assert (False, False) not in {encode_role(r) for r in ROLES}


def test_role_feature_widths():
    roles = ["private", "work", "both"]
    assert role_features(roles, "binary_pair").tolist() == [[1, 0], [0, 1], [1, 1]]
    assert role_features(roles, "ternary_onehot").tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    for enc, w in zip(ROLE_ENCODINGS, (2, 3, 5)):
        assert role_features(roles, enc).shape == (3, w) == (3, len(role_feature_names(enc)))


def test_most_common_role_ties_lexicographic():
    assert most_common_role(["work", "private", "work", "private", "both"]) == "private"


# -- weighted F1 ---------------------------------------------------------------------

def test_f1_examples():
    assert weighted_f1(list("aabb"), list("abbb")) == pytest.approx(11 / 15, abs=1e-12)
    assert weighted_f1(["a", "b"], ["a", "a"]) == pytest.approx(1 / 3, abs=1e-12)
    assert weighted_f1(list("abc"), list("abc")) == 1.0
    with pytest.raises(EmptyInput):
        weighted_f1([], [])


def confusion_f1(y_true, y_pred):
    labels = sorted(set(y_true) | set(y_pred))
    idx = {c: i for i, c in enumerate(labels)}
    M = np.zeros((len(labels), len(labels)))
    for t, p in zip(y_true, y_pred):
        M[idx[t], idx[p]] += 1
    total = 0.0
    for c, i in idx.items():
        tp, col, row = M[i, i], M[:, i].sum(), M[i, :].sum()
        prec = tp / col if col else 0.0
        rec = tp / row if row else 0.0
        f = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        total += row / len(y_true) * f
    return total


def test_f1_matches_confusion_matrix_oracle():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(1, 30))
        k = int(rng.integers(1, 5))
        yt = rng.integers(0, k, n).tolist()
        yp = rng.integers(0, k, n).tolist()
        assert abs(weighted_f1(yt, yp) - confusion_f1(yt, yp)) <= 1e-9


# -- folds -------------------------------------------------------------------------

def test_folds_examples():
    fa = stratified_kfold(["a", "b", "c"] * 3, 3, seed=1)
    for f in range(3):
        assert sorted(["a", "b", "c"][i % 3] for i in fa.test_indices(f)) == ["a", "b", "c"]
    assert sorted(stratified_kfold(["x"] * 3, 3).folds) == [0, 1, 2]
    rare = stratified_kfold(["a", "a", "a", "b", "b"], 3)
    assert rare.training_only == ("b",)
    assert [rare.folds[i] for i in (3, 4)] == [-1, -1]
    with pytest.raises(TooFewSamples):
        stratified_kfold(["a", "b"], 3)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.sampled_from("abcd"), min_size=3, max_size=60), st.integers(2, 5), st.integers(0, 999))
def test_fold_properties(labels, k, seed):
    if len(labels) < k:
        return
    fa = stratified_kfold(labels, k, seed)
    tests = [set(fa.test_indices(f).tolist()) for f in range(k)]
    assert all(not (a & b) for a, b in itertools.combinations(tests, 2))
    scored = set().union(*tests)
    rare = {i for i, lab in enumerate(labels) if lab in fa.training_only}
    assert scored | rare == set(range(len(labels))) and not (scored & rare)
    sizes = [len(t) for t in tests]
    assert max(sizes) - min(sizes) <= 1
    for lab in set(labels) - set(fa.training_only):
        per = [sum(labels[i] == lab for i in t) for t in tests]
        assert max(per) - min(per) <= 1
    for f in range(k):
        assert set(fa.train_indices(f).tolist()) == set(range(len(labels))) - tests[f]


# -- statistics ------------------------------------------------------------------------

def test_t_test_fixture():
    r = paired_t_test([1, 2, 3], [2, 4, 6])
    assert r.t == pytest.approx(-3.4641, abs=1e-4) and r.df == 2
    # two-tailed tail probability for t=3.4641, df=2 from tables: about 0.0742
    assert r.p == pytest.approx(0.07418, abs=1e-4)
    assert cohens_dz([1, 2, 3], [2, 4, 6]) == pytest.approx(-2.0)


def test_t_test_degenerate_cases():
    same = paired_t_test([0.3, 0.5, 0.9], [0.3, 0.5, 0.9])
    assert (same.t, same.p, same.zero_variance) == (0.0, 1.0, True)
    b = np.array([0.1, 0.4, 0.7, 0.2])
    shift = paired_t_test(b + 0.05, b)
    assert shift.t == math.inf and shift.p == 0.0 and shift.zero_variance
    with pytest.raises(ZeroVariance):
        cohens_dz(b + 0.05, b)
    assert math.isnan(cohens_d(b + 0.05, b).d_z)
    assert cohens_dav(b + 0.05, b) == pytest.approx(0.05 / b.std(ddof=1))
    assert cohens_dz(b, b) == 0.0 and cohens_dav(b, b) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=20))
def test_t_test_antisymmetry(pairs):
    a, b = [p[0] for p in pairs], [p[1] for p in pairs]
    ab, ba = paired_t_test(a, b), paired_t_test(b, a)
    assert ab.p == pytest.approx(ba.p)
    if math.isfinite(ab.t):
        assert ab.t == pytest.approx(-ba.t)
    else:
        assert ab.t == -ba.t
    assert 0.0 <= ab.p <= 1.0


# -- two-stage ----------------------------------------------------------------------------

def _const(value, n_features):
    return train(ModelSpec("baseline"), np.zeros((2, n_features)), [value, value])


def test_stage_one_no_role_uses_fallback_and_stage_two_none():
    X = sp.csr_matrix(np.ones((3, 2)))
    m = TwoStageModel(_const(False, 2), _const(False, 2), _const(False, 7), _const(False, 7), "work")
    labels, roles = predict_matrix(m, X)
    assert roles == ["work"] * 3 and labels == ["none"] * 3


def test_oracle_roles_only_change_stage_two_inputs():
    X = sp.csr_matrix(np.ones((2, 2)))
    m = TwoStageModel(_const(True, 2), _const(True, 2), _const(True, 7), _const(False, 7), "private")
    labels, roles = predict_matrix(m, X, roles=["work", "private"])
    assert roles == ["work", "private"] and labels == ["private_only"] * 2
    assert with_roles(X, roles).shape[1] == X.shape[1] + 5


def test_degenerate_private_only_participant():
    X = sp.csr_matrix(np.random.default_rng(0).normal(size=(6, 3)))
    m = fit_two_stage(X, ["private"] * 6, ["private_only", "none"] * 3, ModelSpec("tree"))
    assert m.role_private_model.constant and m.role_work_model.constant
    assert predict_matrix(m, X)[1] == ["private"] * 6


def _segmenter_windows(tiny_synth):
    d = tiny_synth[0]
    assert d.persona.kind == "segmenter"
    return extract_labeled_windows(d.events, d.esm)


def test_two_stage_width_and_training_fit(tiny_synth):
    windows = _segmenter_windows(tiny_synth)
    model = train_two_stage(windows, "features", ModelSpec("tree"))
    base = model.builder.transform(window_table(windows)).shape[1]
    assert model.intr_private_model.n_features == base + 5
    roles = [w.role for w in windows]
    labels, _ = predict_two_stage(model, windows, roles=roles)
    assert labels == [w.interruptibility for w in windows]
    with pytest.raises(ValueError):
        train_two_stage(windows, "features_plus_roles", ModelSpec("tree"))


def test_oracle_role_f1_is_perfect_on_noiseless_segmenter(tiny_synth):
    windows = _segmenter_windows(tiny_synth)
    settings_ = EvalSettings(("features",), (ModelEntry.make("tree"),), ("two_stage",), seed=4)
    res = evaluate_unit("P01", "combined", windows, settings_)
    oracle = [r.f1 for r in res.rows if r.target == "two_stage_oracle"]
    assert oracle and all(f == 1.0 for f in oracle)


# -- evaluation and reports -----------------------------------------------------------------------

def _units(tiny_synth):
    return build_units({d.participant: d.events for d in tiny_synth},
                       {d.participant: d.esm for d in tiny_synth}, ["combined", "phone"])


SETTINGS = EvalSettings(("features", "features_plus_roles", "app_seq_tfidf"),
                        (ModelEntry.make("baseline"), ModelEntry.make("tree")), seed=7)


@pytest.fixture(scope="module")
def results(tiny_synth):
    return evaluate(_units(tiny_synth), SETTINGS)


def test_evaluation_rows(results):
    assert [(r.participant, r.device_scope) for r in results] == [
        ("P01", "combined"), ("P01", "phone"), ("P02", "combined"), ("P02", "phone")]
    rows = [row for r in results for row in r.rows]
    assert all(0.0 <= row.f1 <= 1.0 and row.n_test > 0 for row in rows)
    targets = {row.target for row in rows}
    assert targets == {"interruptibility", "interrupt_private", "interrupt_work", "role", "role_private",
                       "role_work", "two_stage", "two_stage_oracle"}
    assert not any(row.feature_set == "features_plus_roles" and row.target in ("role", "two_stage")
                   for row in rows)


def test_evaluation_is_deterministic_and_parallel_safe(tiny_synth, results):
    again = evaluate(_units(tiny_synth), SETTINGS, jobs=2)
    a = EvalReport.build(results, {"x": 1}).to_json()
    b = EvalReport.build(again, {"x": 1}).to_json()
    assert a == b


def test_report_round_trip(results, tmp_path):
    rep = EvalReport.build(results, {"seed": 7})
    rep.write(tmp_path)
    back = EvalReport.load(tmp_path)
    assert back.to_json() == rep.to_json()
    assert (tmp_path / "results.csv").read_text().splitlines()[0] == \
        "participant,device_scope,target,feature_set,model,fold,f1"
    assert "Paired comparisons" in (tmp_path / "report.txt").read_text()
    labels = {c.label for c in rep.comparisons}
    assert "features vs features_plus_roles" in labels and "features vs two_stage" in labels


def test_compare_report_with_itself(results):
    rep = EvalReport.build(results, {})
    for c in compare_reports(rep, rep):
        assert (c.t, c.p) == (0.0, 1.0)


def test_compare_shifted_arm_flags_zero_variance():
    b = {("P01", "combined"): 0.5, ("P02", "combined"): 0.6, ("P03", "combined"): 0.7}
    a = {k: v + 0.05 for k, v in b.items()}
    c = compare_scores(a, b)
    assert c.t == math.inf and c.zero_variance
    with pytest.raises(KeyMismatch):
        compare_scores(a, {("P01", "combined"): 0.1, ("P02", "combined"): 0.2})


def test_derive_seed_is_stable():
    assert derive_seed(0, "a", 1) == derive_seed(0, "a", 1)
    assert derive_seed(0, "a", 1) != derive_seed(0, "a", 2)
    assert 0 <= derive_seed(5, "x") < 2**63


def test_feature_builder_fits_on_training_rows_only(tiny_synth):
    windows = _segmenter_windows(tiny_synth)
    table = window_table(windows)
    train_part, test_part = table.take(range(10)), table.take(range(10, len(table)))
    b = FeatureBuilder("features_plus_appseq", "CV").fit(train_part)
    assert b.transform(test_part).shape == (len(test_part), len(b.columns))
    assert all(c[4:] in {a for s in train_part.sequences for a in s} for c in b.columns if c.startswith("app:"))
