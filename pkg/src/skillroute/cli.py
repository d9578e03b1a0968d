"""Command-line entry point.

Exit status: 0 ok, 2 bad input, 3 missing artifact, 4 invalid config,
5 backend exhaustion.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from filelock import FileLock, Timeout

from . import __version__
from .config import PipelineConfig, load_config
from .errors import ConfigError, InputError, MissingArtifactError, SkillRouteError
from .pipeline import Backends, PreprocessResult, infer, preprocess
from .profile import read_records
from .router import read_assignments
from .scheduler import CostModel, estimate_costs, make_plan, write_report

log = logging.getLogger("skillroute")

EXIT_OK, EXIT_INPUT, EXIT_ARTIFACT, EXIT_CONFIG, EXIT_BACKEND = 0, 2, 3, 4, 5
LOCK_NAME = ".skillroute.lock"


def _existing_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} file not found: {path}")
    return p


def _lock(out_dir: Path) -> FileLock:
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(out_dir / LOCK_NAME))
    try:
        lock.acquire(timeout=0)
    except Timeout:
        raise ConfigError(f"another run holds the lock on {out_dir}") from None
    return lock


def _dump(config: PipelineConfig) -> None:
    print(json.dumps(config.to_dict(), indent=2))


def cmd_profile(args) -> int:
    config = load_config(args.config)
    if args.dump_config:
        _dump(config)
        return EXIT_OK
    validation = read_records(_existing_file(args.validation, "validation"))
    out = Path(args.out)
    lock = _lock(out)
    try:
        backends = Backends.from_config(config)
        result = preprocess(validation, config, backends, out)
    finally:
        lock.release()
    print(json.dumps({
        "aggregator": result.aggregator_id,
        "profiles": {p.model_id: p.total_score for p in result.profiles},
        "vocabulary_size": len(result.vocabulary),
        "backend_calls": backends.total_calls(),
    }, indent=2))
    return EXIT_OK


def run_config(args) -> PipelineConfig:
    config = load_config(args.config)
    routing = {}
    for flag, name in (("k", "k"), ("temp", "temperature"), ("trim", "trim_frac"), ("seed", "seed")):
        value = getattr(args, flag)
        if value is not None:
            routing[name] = value
    changes = {}
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.discuss is not None:
        changes["discussion_rounds"] = args.discuss
    try:
        routing_params = dataclasses.replace(config.routing, **routing)
        return dataclasses.replace(config, routing=routing_params, **changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def cmd_run(args) -> int:
    config = run_config(args)
    if args.dump_config:
        _dump(config)
        return EXIT_OK
    test = read_records(_existing_file(args.test, "test"))
    out = Path(args.out)
    if not (out / "manifest.json").exists():
        raise MissingArtifactError(f"no preprocessing artifacts in {out}; run `skillroute profile` first")
    pre = PreprocessResult.load(out)
    lock = _lock(out)
    try:
        backends = Backends.from_config(config)
        result = infer(test, pre, config, backends, out)
    finally:
        lock.release()
    answered = sum(r.final_answer is not None for r in result.records)
    print(json.dumps({
        "queries": len(result.records),
        "answered": answered,
        "aggregator": pre.aggregator_id,
        "resumed": result.resumed,
        "backend_calls": backends.total_calls(),
    }, indent=2))
    return EXIT_OK


def cmd_simulate(args) -> int:
    assignments = read_assignments(_existing_file(args.assignments, "assignments"))
    if not assignments:
        raise InputError(f"{args.assignments}: no assignments")
    if args.workers < 1:
        raise ConfigError("workers must be >= 1")
    cost_model = CostModel(args.load_cost, args.per_call_cost)
    plan = make_plan(assignments, args.workers, cost_model)
    report = estimate_costs(plan, assignments, cost_model)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "plan.json").write_text(json.dumps(plan.to_dict(), indent=2) + "\n", "utf-8")
        write_report(report, out / "load_cost.json", out / "load_cost.csv")
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skillroute", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="build model profiles and select the aggregator")
    p.add_argument("--config", required=True)
    p.add_argument("--validation", required=True, help="validation set (JSONL)")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    p.set_defaults(func=cmd_profile)

    r = sub.add_parser("run", help="route, execute and aggregate a test set")
    r.add_argument("--config", required=True)
    r.add_argument("--test", required=True, help="test set (JSONL)")
    r.add_argument("--out", required=True, help="run directory produced by `profile`")
    r.add_argument("--k", type=int, help="experts per query")
    r.add_argument("--temp", type=float, help="routing softmax temperature")
    r.add_argument("--trim", type=float, help="trim fraction of total selections")
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--discuss", type=int, choices=(0, 1), help="discussion rounds before aggregation")
    r.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("simulate", help="model load costs of an assignment file, no backends")
    s.add_argument("--assignments", required=True, help="assignments JSONL")
    s.add_argument("--load-cost", type=float, default=CostModel.load_cost)
    s.add_argument("--per-call-cost", type=float, default=CostModel.per_call_cost)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", help="directory for plan and report files")
    s.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SkillRouteError as exc:
        print(f"skillroute: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
