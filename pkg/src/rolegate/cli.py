"""Command-line front end.

Exit codes: 0 ok, 1 schedule violations found, 2 config error, 3 input error,
4 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import yaml

from .events import EventError
from .features import read_triplets, write_triplets
from .experiment import SEED_ENV, ConfigError, ExperimentConfig, InputError, run_experiment, with_overrides
from .learners import LearnerError, ModelSpec, save_model, train
from .pipeline import (EvalReport, FeatureBuilder, KeyMismatch, compare_reports, encode_interruptibility,
                       encode_role, fit_two_stage, format_comparisons, window_table, with_roles)
from .pipeline.design import role_feature_names
from .pipeline.evaluate import genre_catalog
from .scheduler import SchedulerConfig, check_constraints
from .sessionize import SCOPES, StopwordList, extract_labeled_windows
from .synthgen import GeneratorConfig, generate, load_participant, load_prompts, participants_in, write_dataset

EXIT_OK, EXIT_VIOLATIONS, EXIT_CONFIG, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3, 4


class _Console:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, *parts) -> None:
        if not self.quiet:
            print(*parts)


def _yaml(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return data or {}


def _seed(args, fallback: int = 0) -> int:
    if args.seed is not None:
        return args.seed
    if os.environ.get(SEED_ENV):
        try:
            return int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    return fallback


def _require(args, name: str, flag: str):
    value = getattr(args, name)
    if value is None:
        raise ConfigError(f"{flag} is required")
    return value


# -- subcommands --------------------------------------------------------------

def cmd_synth(args, say) -> int:
    data = _yaml(args.config)
    data = data.get("synth", data)  # accept an experiment config too
    data["seed"] = _seed(args, int(data.get("seed", 0)))
    try:
        config = GeneratorConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad generator config: {exc}") from None
    out = _require(args, "out", "--out")
    dataset = generate(config)
    write_dataset(dataset, out, config)
    n_esm = sum(len(d.esm) for d in dataset)
    say(f"wrote {len(dataset)} participants, {n_esm} answered prompts to {out}")
    return EXIT_OK


def cmd_schedule_check(args, say) -> int:
    data_dir = _require(args, "data", "--data")
    raw = _yaml(args.config)
    raw = raw.get("scheduler", raw.get("synth", {}).get("scheduler", raw))
    try:
        config = SchedulerConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scheduler config: {exc}") from None
    pids = sorted(p.name.split(".")[0] for p in Path(data_dir).glob("*.prompts.jsonl"))
    if not pids:
        raise InputError(f"no prompt logs (*.prompts.jsonl) in {data_dir}")
    total = 0
    for pid in pids:
        try:
            prompts, offset = load_prompts(data_dir, pid)
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"{pid}: {exc}") from None
        violations = check_constraints(prompts, config, offset)
        total += len(violations)
        say(f"{pid}: {len(prompts)} prompts, {len(violations)} violations")
        for v in violations:
            say(f"  #{v.index} {v.kind}: {v.detail}")
    return EXIT_VIOLATIONS if total else EXIT_OK


def cmd_featurize(args, say) -> int:
    data_dir = _require(args, "data", "--data")
    out = Path(_require(args, "out", "--out"))
    out.mkdir(parents=True, exist_ok=True)
    scopes = [args.scope] if args.scope else list(SCOPES)
    stopwords = StopwordList.load(args.stopwords) if args.stopwords else StopwordList.default()
    pids = participants_in(data_dir)
    if not pids:
        raise InputError(f"no ESM logs (*.esm.jsonl) in {data_dir}")
    for pid in pids:
        try:
            events, esm = load_participant(data_dir, pid)
        except (EventError, OSError) as exc:
            raise InputError(f"{pid}: {exc}") from None
        genres = genre_catalog(events)
        for scope in scopes:
            windows = extract_labeled_windows(events, esm, stopwords, scope)
            if not windows:
                continue
            table = window_table(windows, genres, stopwords)
            builder = FeatureBuilder(args.feature_set, args.appseq_mode).fit(table)
            X = builder.transform(table)
            columns = builder.columns
            if builder.uses_roles:
                X = with_roles(X, table.roles, args.role_encoding)
                columns = columns + role_feature_names(args.role_encoding)
            stem = out / f"{pid}.{scope}"
            write_triplets(X, f"{stem}.X.txt", columns)
            with open(f"{stem}.labels.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["end_ts", "role", "interruptibility"])
                for win in windows:
                    w.writerow([win.end_ts, win.role, win.interruptibility])
            say(f"{pid} {scope}: {X.shape[0]} windows x {X.shape[1]} columns")
    return EXIT_OK


def _read_labels(path: Path) -> tuple[list[str], list[str]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [r["role"] for r in rows], [r["interruptibility"] for r in rows]


def cmd_train(args, say) -> int:
    feat_dir = Path(_require(args, "features", "--features"))
    out = Path(_require(args, "out", "--out"))
    out.mkdir(parents=True, exist_ok=True)
    try:
        params = json.loads(args.params) if args.params else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--params is not JSON: {exc}") from None
    seed = _seed(args)
    stems = sorted(p.name[: -len(".X.txt")] for p in feat_dir.glob("*.X.txt"))
    if args.scope:
        stems = [s for s in stems if s.endswith("." + args.scope)]
    if not stems:
        raise InputError(f"no featurized matrices (*.X.txt) in {feat_dir}")
    for stem in stems:
        X, _ = read_triplets(feat_dir / f"{stem}.X.txt")
        roles, intr = _read_labels(feat_dir / f"{stem}.labels.csv")
        spec = ModelSpec(args.model, params, seed)
        name = f"{stem}.{args.target}.{args.model}"
        if args.target == "two_stage":
            model = fit_two_stage(X, roles, intr, spec, args.role_encoding)
            for part in ("role_private_model", "role_work_model", "intr_private_model", "intr_work_model"):
                save_model(getattr(model, part), out / f"{name}.{part}.npz")
            (out / f"{name}.json").write_text(json.dumps(
                {"fallback_role": model.fallback_role,
                 "role_feature_encoding": model.role_feature_encoding}, sort_keys=True) + "\n")
        else:
            labels, encode = (intr, encode_interruptibility) if args.target == "interruptibility" \
                else (roles, encode_role)
            if args.model == "baseline":
                save_model(train(spec, X, labels), out / f"{name}.npz")
            else:
                bits = [encode(v) for v in labels]
                for i, part in enumerate(("private", "work")):
                    save_model(train(spec, X, [b[i] for b in bits]), out / f"{name}.{part}.npz")
        say(f"{stem}: trained {args.target} {args.model} on {X.shape[0]} windows")
    return EXIT_OK


def cmd_evaluate(args, say) -> int:
    config = ExperimentConfig.load(_require(args, "config", "--config"))
    config = with_overrides(config, seed=args.seed, jobs=args.jobs, out=args.out, scope=args.scope)
    if config.out is None:
        raise ConfigError("an output directory is required (--out or 'out' in the config)")
    report = run_experiment(config)
    say(report.to_text())
    return EXIT_OK


def _load_report(path: str) -> EvalReport:
    try:
        return EvalReport.load(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read report {path}: {exc}") from None


def cmd_compare(args, say) -> int:
    a, b = _load_report(args.report_a), _load_report(args.report_b)
    text = format_comparisons(compare_reports(a, b))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        Path(args.out, "comparison.txt").write_text(text)
    say(text)
    return EXIT_OK


def cmd_report(args, say) -> int:
    report = _load_report(args.report)
    if args.out:
        report.write(args.out)
    say(report.to_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--seed", type=int, help="base seed (overrides config and ROLEGATE_SEED)")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("--out", help="output directory")
    common.add_argument("--scope", choices=SCOPES, help="restrict to one device scope")
    common.add_argument("--quiet", action="store_true", help="suppress console output")

    parser = argparse.ArgumentParser(prog="rolegate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("schedule-check", parents=[common], help="audit prompt logs against the schedule rules")
    p.add_argument("--data", help="dataset directory with *.prompts.jsonl")
    p.set_defaults(func=cmd_schedule_check)

    p = sub.add_parser("featurize", parents=[common], help="write per-participant design matrices")
    p.add_argument("--data", help="dataset directory")
    p.add_argument("--feature-set", default="features")
    p.add_argument("--appseq-mode", default="TFIDF", choices=("CV", "TF", "TFIDF"))
    p.add_argument("--role-encoding", default="both", choices=("binary_pair", "ternary_onehot", "both"))
    p.add_argument("--stopwords", help="stopword file replacing the bundled list")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", parents=[common], help="fit models on featurized matrices")
    p.add_argument("--features", help="featurize output directory")
    p.add_argument("--model", default="forest")
    p.add_argument("--params", help="hyperparameters as a JSON object")
    p.add_argument("--target", default="interruptibility", choices=("interruptibility", "role", "two_stage"))
    p.add_argument("--role-encoding", default="both", choices=("binary_pair", "ternary_onehot", "both"))
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="run a cross-validated experiment")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common], help="paired tests between two reports")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", parents=[common], help="render a saved report")
    p.add_argument("report", help="report.json or its directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    say = _Console(args.quiet)
    try:
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        return args.func(args, say)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, KeyMismatch, EventError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LearnerError, ValueError, RuntimeError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
