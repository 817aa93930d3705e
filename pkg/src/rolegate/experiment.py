"""Experiment configuration and the end-to-end run: data -> windows -> evaluation -> report."""

from __future__ import annotations

import hashlib
import json
import os
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import yaml

from .events import EventError
from .learners import FAMILIES
from .pipeline import (FEATURE_SETS, ROLE_ENCODINGS, EvalReport, EvalSettings, ModelEntry, build_units,
                       evaluate)
from .pipeline.evaluate import TARGETS
from .pipeline.seeds import derive_seed
from .sessionize import SCOPES, StopwordList
from .synthgen import GeneratorConfig, generate, load_participant, participants_in

SEED_ENV = "ROLEGATE_SEED"


class ConfigError(ValueError):
    pass


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    feature_sets: tuple = ("features", "features_plus_roles")
    models: tuple = (ModelEntry.make("forest"),)
    device_scopes: tuple = ("combined",)
    targets: tuple = TARGETS
    k: int = 3
    seed: int = 0
    data_dir: str | None = None
    synth: dict | None = None
    out: str | None = None
    jobs: int = 1
    appseq_mode: str = "TFIDF"
    role_feature_encoding: str = "both"
    stopwords: str | None = None
    comparisons: tuple | None = None

    def __post_init__(self):
        if not self.feature_sets:
            raise ConfigError("at least one feature set is required")
        if not self.models:
            raise ConfigError("at least one model is required")
        bad = [f for f in self.feature_sets if f not in FEATURE_SETS]
        if bad:
            raise ConfigError(f"unknown feature sets {bad}; choose from {sorted(FEATURE_SETS)}")
        bad = [m.family for m in self.models if m.family not in FAMILIES]
        if bad:
            raise ConfigError(f"unknown model families {bad}; choose from {sorted(FAMILIES)}")
        if not self.device_scopes or any(s not in SCOPES for s in self.device_scopes):
            raise ConfigError(f"device_scopes must be a non-empty subset of {SCOPES}")
        if not self.targets or any(t not in TARGETS for t in self.targets):
            raise ConfigError(f"targets must be a non-empty subset of {TARGETS}")
        if self.k < 2:
            raise ConfigError("k must be at least 2")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if self.appseq_mode not in ("CV", "TF", "TFIDF"):
            raise ConfigError("appseq_mode must be CV, TF or TFIDF")
        if self.role_feature_encoding not in ROLE_ENCODINGS:
            raise ConfigError(f"role_feature_encoding must be one of {ROLE_ENCODINGS}")
        if (self.data_dir is None) == (self.synth is None):
            raise ConfigError("give exactly one input: data_dir or synth")
        if len({m.name for m in self.models}) != len(self.models):
            raise ConfigError("model names must be unique")

    # -- loading --------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: str | Path | None = None) -> "ExperimentConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("config must be a mapping")
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields {unknown}")
        try:
            models = []
            for m in data.pop("models", [{"family": "forest"}]):
                if isinstance(m, str):
                    m = {"family": m}
                models.append(ModelEntry.make(m["family"], m.get("name"), m.get("params")))
            data["models"] = tuple(models)
            for key in ("feature_sets", "device_scopes", "targets"):
                if key in data:
                    data[key] = tuple(data[key] or ())
            if data.get("comparisons") is not None:
                data["comparisons"] = tuple((c.get("label", ""), tuple(c["a"]), tuple(c["b"]))
                                            for c in data["comparisons"])
            for key in ("data_dir", "stopwords"):
                if data.get(key) is not None and base_dir is not None:
                    data[key] = str(Path(base_dir, data[key]))
            for key in ("k", "seed", "jobs"):
                if key in data:
                    data[key] = int(data[key])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
        return cls.from_dict(data or {}, base_dir=path.parent)

    def to_dict(self) -> dict:
        return {
            "feature_sets": list(self.feature_sets),
            "models": [{"name": m.name, "family": m.family, "params": dict(m.params)} for m in self.models],
            "device_scopes": list(self.device_scopes),
            "targets": list(self.targets),
            "k": self.k,
            "seed": self.seed,
            "data_dir": self.data_dir,
            "synth": self.synth,
            "appseq_mode": self.appseq_mode,
            "role_feature_encoding": self.role_feature_encoding,
            "stopwords": self.stopwords,
            "comparisons": None if self.comparisons is None else
            [{"label": c[0], "a": list(c[1]), "b": list(c[2])} for c in self.comparisons],
        }

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def settings(self) -> EvalSettings:
        return EvalSettings(tuple(self.feature_sets), tuple(self.models), tuple(self.targets), self.k,
                            self.seed, self.appseq_mode, self.role_feature_encoding)

    def generator_config(self) -> GeneratorConfig:
        data = dict(self.synth or {})
        data.setdefault("seed", self.seed)
        try:
            return GeneratorConfig.from_dict(data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad synth section: {exc}") from None


def with_overrides(config: ExperimentConfig, *, seed: int | None = None, jobs: int | None = None,
                   out: str | None = None, scope: str | None = None,
                   env: Mapping[str, str] | None = None) -> ExperimentConfig:
    """Apply the seed environment variable, then explicit overrides (which win)."""
    env = os.environ if env is None else env
    data = {f: getattr(config, f) for f in config.__dataclass_fields__}
    if env.get(SEED_ENV):
        try:
            data["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    if seed is not None:
        data["seed"] = seed
    if jobs is not None:
        data["jobs"] = jobs
    if out is not None:
        data["out"] = out
    if scope is not None:
        data["device_scopes"] = (scope,)
    return ExperimentConfig(**data)


def load_inputs(config: ExperimentConfig):
    """Per-participant merged events and ESM answers, from disk or freshly generated."""
    if config.synth is not None:
        data = generate(config.generator_config())
        return {d.participant: d.events for d in data}, {d.participant: d.esm for d in data}
    base = Path(config.data_dir)
    if not base.is_dir():
        raise InputError(f"data directory {base} does not exist")
    pids = participants_in(base)
    if not pids:
        raise InputError(f"no ESM logs (*.esm.jsonl) in {base}")
    events, esm = {}, {}
    for pid in pids:
        try:
            events[pid], esm[pid] = load_participant(base, pid)
        except (EventError, OSError, ValueError) as exc:
            raise InputError(f"{pid}: {exc}") from None
    return events, esm


def manifest(config: ExperimentConfig) -> dict:
    import numba
    import numpy
    import scipy

    from . import __version__
    seeds = {"base": config.seed}
    if config.synth is not None:
        gen = config.generator_config()
        seeds["generator"] = gen.seed
        seeds["participants"] = {f"P{i + 1:02d}": derive_seed(gen.seed, "participant", i)
                                 for i in range(gen.participants)}
    return {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "seeds": seeds,
        "versions": {"rolegate": __version__, "python": platform.python_version(),
                     "numpy": numpy.__version__, "scipy": scipy.__version__, "numba": numba.__version__,
                     "pyyaml": yaml.__version__},
    }


def run_experiment(config: ExperimentConfig, out: str | Path | None = None) -> EvalReport:
    """Run every participant x scope x feature set x model x fold and write the report files."""
    stopwords = StopwordList.load(config.stopwords) if config.stopwords else StopwordList.default()
    events, esm = load_inputs(config)
    units = build_units(events, esm, config.device_scopes, stopwords)
    results = evaluate(units, config.settings(), jobs=config.jobs, stopwords=stopwords)
    report = EvalReport.build(results, config.to_dict(), config.comparisons)
    out = out if out is not None else config.out
    if out is not None:
        report.write(out)
        Path(out, "manifest.json").write_text(json.dumps(manifest(config), sort_keys=True, indent=1) + "\n")
    return report


__all__ = ["ExperimentConfig", "ConfigError", "InputError", "SEED_ENV", "run_experiment", "with_overrides",
           "load_inputs", "manifest"]
