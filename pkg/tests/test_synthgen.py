from __future__ import annotations

from collections import Counter

import pytest

from rolegate.scheduler import check_constraints
from rolegate.synthgen import (PERSONAS, RULES, GeneratorConfig, OutOfHorizon, Trace, generate,
                               generate_participant, ground_truth_oracle, load_participant, load_prompts,
                               load_trace, participants_in, write_dataset)

SEG = RULES["segmenter"]


def _trace(persona="segmenter"):
    return Trace("P01", persona, 0, (0, 100, 200), (100, 200, 300), ("private", "work", "both"), RULES[persona])


def test_oracle_examples():
    assert ground_truth_oracle(_trace(), 50) == ("private", "private_only")
    assert ground_truth_oracle(_trace("integrator"), 150) == ("work", "both")
    assert ground_truth_oracle(_trace(), 100) == ("work", "work_only")  # left-closed blocks
    assert ground_truth_oracle(_trace(), 299)[0] == "both"
    for ts in (-1, 300):
        with pytest.raises(OutOfHorizon):
            ground_truth_oracle(_trace(), ts)


def test_rules_form_the_continuum():
    assert SEG["private"] == "private_only" and SEG["work"] == "work_only"
    assert set(RULES["integrator"].values()) == {"both"}
    wp, pp = RULES["combinator_work_permeable"], RULES["combinator_private_permeable"]
    assert (wp["private"], wp["work"]) == ("both", "work_only")
    assert (pp["private"], pp["work"]) == ("private_only", "both")


def test_noiseless_labels_follow_schedule_and_rule(tiny_synth):
    for d in tiny_synth:
        assert d.esm
        for r in d.esm:
            role, intr = ground_truth_oracle(d.trace, r.timestamp)
            assert (r.role, r.interruptibility) == (role, intr)
            assert intr == RULES[d.persona.kind][role]


def test_segmenter_work_answers_are_work_only(tiny_synth):
    seg = tiny_synth[0]
    work = [r for r in seg.esm if r.role == "work"]
    assert work and all(r.interruptibility == "work_only" for r in work)


def test_trace_covers_horizon_without_gaps(tiny_synth):
    t = tiny_synth[0].trace
    assert all(e == s for e, s in zip(t.ends, t.starts[1:]))
    assert t.ends[-1] - t.starts[0] == 7 * 24 * 3600 * 1000


def test_generated_prompts_pass_the_audit(tiny_synth):
    for d in tiny_synth:
        assert check_constraints(d.prompts, GeneratorConfig().scheduler, d.trace.local_offset) == []
        assert sum(p.answered for p in d.prompts) == len(d.esm)


def test_fixed_seed_gives_byte_identical_files(tmp_path):
    cfg = GeneratorConfig(participants=2, days=3, seed=4, noise=0.2)
    write_dataset(generate(cfg), tmp_path / "a", cfg)
    write_dataset(generate(cfg), tmp_path / "b", cfg)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(names) == 2 * 5 + 1
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    other = GeneratorConfig(participants=2, days=3, seed=5, noise=0.2)
    write_dataset(generate(other), tmp_path / "c")
    assert (tmp_path / "a" / "P01.phone.jsonl").read_bytes() != (tmp_path / "c" / "P01.phone.jsonl").read_bytes()


def test_dataset_files_load_back(tmp_path):
    cfg = GeneratorConfig(participants=1, days=2, seed=8)
    d, = generate(cfg)
    write_dataset([d], tmp_path)
    assert participants_in(tmp_path) == ["P01"]
    events, esm = load_participant(tmp_path, "P01")
    assert events == d.events and esm == d.esm
    prompts, offset = load_prompts(tmp_path, "P01")
    assert prompts == d.prompts and offset == cfg.local_offset
    assert load_trace(tmp_path, "P01") == d.trace


def test_participants_are_independent_of_cohort_size():
    small = generate_participant(1, GeneratorConfig(participants=2, days=2, seed=3))
    big = generate_participant(1, GeneratorConfig(participants=9, days=2, seed=3))
    assert small.events == big.events and small.esm == big.esm


def test_persona_mix_cycles():
    cfg = GeneratorConfig(participants=5, days=1, seed=0)
    assert [generate_participant(i, cfg).persona.kind for i in range(5)] == list(PERSONAS) + [PERSONAS[0]]


def test_config_validation():
    with pytest.raises(ValueError):
        GeneratorConfig(noise=1.5)
    with pytest.raises(ValueError):
        GeneratorConfig.from_dict({"participants": 2, "colour": "red"})
    cfg = GeneratorConfig.from_dict({"scheduler": {"fixed_interval": 60}})
    assert cfg.scheduler.fixed_interval == 60
    assert GeneratorConfig.from_dict(cfg.to_dict()) == cfg


def test_full_cohort_answer_count():
    data = generate(GeneratorConfig(seed=1, noise=0.1))
    n = sum(len(d.esm) for d in data)
    assert 2000 <= n <= 5000
    assert Counter(d.persona.kind for d in data) == {p: 4 for p in PERSONAS}
