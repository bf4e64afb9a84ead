"""Command-line entry point: ``locbias sample|run|experiment|replay|overhead``.

Exit codes: 0 ok, 1 faults found (run/replay), 2 usage or configuration
error, 3 output not writable, 4 replay disagrees with the recorded signature.
Output on stdout is deterministic for action budgets; diagnostics go to
stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .bench import HARNESSES, UnknownHarness, get_harness, parse_fault_settings
from .experiments import ConfigError, load_config, markdown_report, run_experiment, write_report
from .harness import OK, FaultSignature, HarnessError, parse_testcase, read_comments
from .locmap import DEFAULT_SAMPLING_BUDGET, LocMapError, load_locmap, loc_distribution, sample_loc, save_locmap, static_loc
from .runner import Budget, overhead_ratios, results_csv, run_trial, write_failing_tests
from .strategies import KINDS, LOC_KINDS, GaParams, StrategyConfig, StrategyError

EXIT_OK = 0
EXIT_FAULTS = 1
EXIT_CONFIG = 2
EXIT_OUTPUT = 3
EXIT_MISMATCH = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _faults(args, harness_id: str) -> dict[str, bool]:
    settings = list(args.set or [])
    try:
        parsed = parse_fault_settings(settings)
    except UnknownHarness as exc:
        raise CliError(f"unknown harness in --set: {exc.args[0]}") from None
    except ValueError as exc:
        raise CliError(str(exc)) from None
    other = sorted(set(parsed) - {harness_id})
    if other:
        raise CliError(f"--set names harness {other[0]!r} but the command runs {harness_id!r}")
    faults = dict(parsed.get(harness_id, {}))
    if getattr(args, "all_faults", False):
        faults = {f: True for f in get_harness(harness_id).faults} | faults
    return faults


def _harness(harness_id: str, faults: dict[str, bool]):
    try:
        return get_harness(harness_id, faults or None)
    except UnknownHarness:
        raise CliError(f"unknown harness {harness_id!r}; known: {', '.join(sorted(HARNESSES))}") from None
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_OUTPUT) from None


# -- commands -------------------------------------------------------------------


def cmd_sample(args) -> int:
    harness = _harness(args.harness, _faults(args, args.harness))
    locmap = sample_loc(harness, args.budget_actions, args.seed)
    out = Path(args.out)
    try:
        save_locmap(locmap, out)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror or exc}", EXIT_OUTPUT) from None
    table = loc_distribution(locmap)
    print(f"{'class':<16} {'mean_loc':>10} {'samples':>8} {'prob':>8}")
    for cid in locmap.class_ids:
        n = locmap.entries[cid].samples if cid in locmap.entries else 0
        print(f"{cid:<16} {locmap.mean(cid):>10.3f} {n:>8d} {table[cid]:>8.4f}")
    return EXIT_OK


def _strategy(args, harness) -> StrategyConfig:
    table = None
    if args.strategy in LOC_KINDS:
        if args.static_loc:
            table = loc_distribution(static_loc(harness.function_loc, harness.static_bindings, harness.class_ids, harness.id))
        elif args.locmap:
            try:
                table = loc_distribution(load_locmap(args.locmap, harness))
            except OSError as exc:
                raise CliError(f"cannot read {args.locmap}: {exc.strerror or exc}") from None
            except LocMapError as exc:
                raise CliError(str(exc)) from None
        else:
            raise CliError(f"strategy {args.strategy!r} needs --locmap FILE (or --static-loc)")
    try:
        ga = GaParams(
            population_cap=args.ga_population_cap, fresh_prob=args.ga_fresh_prob, elite_k=args.ga_elite_k
        )
        return StrategyConfig(
            kind=args.strategy,
            table=table,
            swarm_disable_prob=args.swarm_disable_prob,
            swarm_force_parents=not args.no_swarm_force_parents,
            ga=ga,
        )
    except StrategyError as exc:
        raise CliError(str(exc)) from None


def cmd_run(args) -> int:
    harness = _harness(args.harness, _faults(args, args.harness))
    strategy = _strategy(args, harness)
    try:
        budget = Budget.seconds(args.budget_seconds) if args.budget_seconds is not None else Budget.actions(args.budget_actions)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    result = run_trial(
        harness, strategy, budget, coverage_on=args.coverage == "on", seed=args.seed, max_length=args.max_length
    )
    text = results_csv([result])
    sys.stdout.write(text)
    for sig in sorted(result.signatures):
        print(f"fault: {sig}")
    if args.csv:
        _write(Path(args.csv), text)
    if result.failing_tests and args.failures_dir:
        try:
            write_failing_tests(result, args.failures_dir, harness)
        except OSError as exc:
            raise CliError(f"cannot write failing tests: {exc.strerror or exc}", EXIT_OUTPUT) from None
    return EXIT_FAULTS if result.signatures else EXIT_OK


def cmd_experiment(args) -> int:
    try:
        config, configured_out = load_config(args.config)
    except UnknownHarness as exc:
        raise CliError(f"unknown harness {exc.args[0]!r}") from None
    except (ConfigError, LocMapError, StrategyError) as exc:
        raise CliError(str(exc)) from None
    if args.jobs is not None:
        if args.jobs < 1:
            raise CliError("--jobs must be >= 1")
        from dataclasses import replace

        config = replace(config, jobs=args.jobs)
    out = args.out or configured_out
    if out is None:
        out = Path(args.config).with_suffix("").name + "-report"
        out = str(Path(args.config).parent / out)
    # fail before the (possibly long) run if the output cannot be created
    try:
        Path(out).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc.strerror or exc}", EXIT_OUTPUT) from None
    report = run_experiment(config)
    try:
        write_report(report, out)
    except OSError as exc:
        raise CliError(f"cannot write report: {exc.strerror or exc}", EXIT_OUTPUT) from None
    sys.stdout.write(markdown_report(report))
    return EXIT_OK


def cmd_replay(args) -> int:
    path = Path(args.testfile)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None
    meta = read_comments(text)
    harness_id = args.harness or meta.get("harness")
    if not harness_id:
        raise CliError("test file names no harness; pass --harness")
    faults = {}
    if meta.get("faults"):
        for item in meta["faults"].split(","):
            name, _, state = item.partition(":")
            faults[name.strip()] = state.strip() == "on"
    faults |= _faults(args, harness_id)
    harness = _harness(harness_id, faults)
    try:
        testcase = parse_testcase(text, harness)
        result = harness.replay(testcase)
    except HarnessError as exc:
        raise CliError(f"{type(exc).__name__}: {exc}") from None
    except ValueError as exc:
        raise CliError(f"cannot parse {path}: {exc}") from None
    print(result.signature if result.status != OK else "ok")
    recorded = meta.get("signature")
    if recorded is not None:
        try:
            expected = FaultSignature.parse(recorded)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        if result.signature != expected:
            print(f"replay mismatch: recorded {expected}", file=sys.stderr)
            return EXIT_MISMATCH
    return EXIT_OK if result.status == OK else EXIT_FAULTS


def cmd_overhead(args) -> int:
    harness = _harness(args.harness, _faults(args, args.harness))
    if args.reps < 1:
        raise CliError("--reps must be >= 1")
    if not args.seconds > 0:
        raise CliError("--seconds must be positive")
    strategy = _strategy(args, harness)
    report = overhead_ratios(harness, strategy, args.seconds, args.reps, args.seed)
    print(f"{'rep':>3} {'actions_without':>16} {'actions_with':>13} {'ratio':>7}")
    for i, (off, on, ratio) in enumerate(zip(report.actions_off, report.actions_on, report.ratios)):
        print(f"{i:>3} {off:>16d} {on:>13d} {ratio:>7.3f}")
    print(f"mean ratio (actions without / actions with): {report.mean:.3f}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--set", action="append", metavar="KEY=VALUE",
        help="fault switch such as bench.avl.fault.rotation=on (repeatable)",
    )
    p.add_argument("--all-faults", action="store_true", help="enable every seeded fault of the harness")


def _add_strategy(p: argparse.ArgumentParser, default: str | None) -> None:
    p.add_argument("--strategy", choices=KINDS, default=default, required=default is None)
    p.add_argument("--locmap", help="LOC map file for loc strategies")
    p.add_argument("--static-loc", action="store_true", help="use declared function LOC instead of a sampled map")
    p.add_argument("--swarm-disable-prob", type=float, default=0.5)
    p.add_argument("--no-swarm-force-parents", action="store_true")
    p.add_argument("--ga-population-cap", type=int, default=50)
    p.add_argument("--ga-fresh-prob", type=float, default=0.2)
    p.add_argument("--ga-elite-k", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locbias", description=__doc__.split("\n")[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"locbias {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="estimate per-class mean LOC and write a LOC map", allow_abbrev=False)
    p.add_argument("harness")
    p.add_argument("--budget-actions", type=int, default=DEFAULT_SAMPLING_BUDGET)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("run", help="run one budgeted trial", allow_abbrev=False)
    p.add_argument("harness")
    _add_strategy(p, None)
    budget = p.add_mutually_exclusive_group()
    budget.add_argument("--budget-actions", type=int, default=10_000)
    budget.add_argument("--budget-seconds", type=float)
    p.add_argument("--coverage", choices=("on", "off"), default="on")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-length", type=int, default=100)
    p.add_argument("--failures-dir", default="failing-tests", help="directory for failing tests ('' to skip)")
    p.add_argument("--csv", help="also write the summary row to this file")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("experiment", help="run a TOML-configured experiment", allow_abbrev=False)
    p.add_argument("config")
    p.add_argument("--out", help="report directory (default: from the config, else <config>-report)")
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("replay", help="replay a serialized test", allow_abbrev=False)
    p.add_argument("testfile")
    p.add_argument("--harness", help="override the harness named in the file")
    _add_common(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("overhead", help="actions per budget with and without coverage", allow_abbrev=False)
    p.add_argument("harness")
    _add_strategy(p, "random")
    p.add_argument("--seconds", type=float, default=1.0)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_overhead)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"locbias {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
