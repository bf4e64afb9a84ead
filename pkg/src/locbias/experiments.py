"""Multi-trial experiments comparing strategies against a baseline.

Every strategy runs on the same seed list (``base_seed + i``), so trial ``i``
of each strategy is directly comparable.  Comparisons use Mann-Whitney by
default; a paired Wilcoxon over shared seeds is available alongside.
"""

from __future__ import annotations

import csv
import io
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .bench import UnknownHarness, get_harness
from .harness import DEFAULT_MAX_LENGTH, Harness
from .locmap import DEFAULT_SAMPLING_BUDGET, ProbabilityTable, load_locmap, loc_distribution, sample_loc, static_loc
from .runner import ACTIONS, Budget, TrialResult, run_trial
from .stats import TWO_SIDED, mann_whitney, wilcoxon
from .strategies import KINDS, LOC_KINDS, GaParams, StrategyConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

SIGNIFICANCE = 0.05
METRICS = ("branches", "statements", "faults")
EQUAL_BUDGET_RUNS = 30
EQUAL_BUDGET_CAP_FACTOR = 100


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    harness_id: str
    strategies: tuple[StrategyConfig, ...]
    trials: int = 100
    budget: Budget = Budget.actions(10_000)
    base_seed: int = 0
    baseline: str = "random"
    faults: Mapping[str, bool] = field(default_factory=dict)
    coverage_on: bool = True
    max_length: int = DEFAULT_MAX_LENGTH
    paired: bool = False
    equal_budget: bool = False
    equal_budget_runs: int = EQUAL_BUDGET_RUNS
    jobs: int = 1

    def __post_init__(self):
        if self.trials < 2:
            raise ConfigError("need at least 2 trials per strategy for significance tests")
        ids = [s.id for s in self.strategies]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate strategy ids: {ids}")
        if self.baseline not in ids:
            raise ConfigError(f"baseline {self.baseline!r} is not among the strategies {ids}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.equal_budget and (self.budget.kind != ACTIONS or not self.coverage_on):
            raise ConfigError("the equal-coverage budget needs an action budget with coverage on")

    @property
    def seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.trials)]

    def harness(self) -> Harness:
        return get_harness(self.harness_id, dict(self.faults) or None)


@dataclass(frozen=True)
class Summary:
    mean: float
    median: float


@dataclass(frozen=True)
class Comparison:
    """One metric of one strategy against the baseline."""

    statistic: float
    p: float
    direction: str  # "+", "-" or "="
    gain: float | None  # percent change of the mean; None when the baseline mean is 0

    @property
    def significant(self) -> bool:
        return self.p < SIGNIFICANCE


@dataclass(frozen=True)
class EqualBudget:
    mean_actions: float | None  # None when no run reached the target
    dnf: int
    runs: int
    target: float


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    results: dict[str, list[TrialResult]]
    summaries: dict[str, dict[str, Summary]]
    detections: dict[str, int]
    comparisons: dict[str, dict[str, Comparison]]
    paired: dict[str, dict[str, Comparison]]
    normalized: dict[str, dict[str, list[float]]]
    equal_budget: dict[str, EqualBudget]

    @property
    def strategy_ids(self) -> list[str]:
        return [s.id for s in self.config.strategies]

    def metrics(self) -> tuple[str, ...]:
        return METRICS if self.config.coverage_on else ("faults",)


# -- running ------------------------------------------------------------------


def _metric(result: TrialResult, metric: str) -> float:
    value = getattr(result, metric)
    if value is None:
        raise ValueError(f"{metric} unavailable with coverage off")
    return float(value)


def _direction(a: float, b: float) -> str:
    return "+" if a > b else "-" if a < b else "="


def _gain(mean: float, base: float) -> float | None:
    if base == 0:
        return 0.0 if mean == 0 else None
    return (mean - base) / base * 100.0


def _run_one(args: tuple) -> TrialResult:
    harness_id, faults, strategy, budget, coverage_on, seed, max_length = args
    harness = get_harness(harness_id, dict(faults) or None)
    return run_trial(harness, strategy, budget, coverage_on=coverage_on, seed=seed, max_length=max_length)


def _run_trials(config: ExperimentConfig) -> dict[str, list[TrialResult]]:
    jobs = [
        (config.harness_id, dict(config.faults), strat, config.budget, config.coverage_on, seed, config.max_length)
        for strat in config.strategies
        for seed in config.seeds
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            done = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * config.jobs))))
    else:
        harness = config.harness()
        done = [
            run_trial(harness, s, b, coverage_on=cov, seed=seed, max_length=ml)
            for _, _, s, b, cov, seed, ml in jobs
        ]
    by_strategy: dict[str, list[TrialResult]] = {s.id: [] for s in config.strategies}
    for r in done:
        by_strategy[r.strategy_id].append(r)
    for rs in by_strategy.values():
        rs.sort(key=lambda r: r.seed)
    return by_strategy


def normalize(values_by_strategy: Mapping[str, Sequence[float]]) -> dict[str, list[float]]:
    """Each value as a percent of the maximum over every trial of every strategy."""
    top = max((v for vs in values_by_strategy.values() for v in vs), default=0.0)
    if top <= 0:
        return {k: [100.0] * len(vs) for k, vs in values_by_strategy.items()}
    return {k: [100.0 * v / top for v in vs] for k, vs in values_by_strategy.items()}


def analyze(config: ExperimentConfig, results: dict[str, list[TrialResult]]) -> ExperimentReport:
    metrics = METRICS if config.coverage_on else ("faults",)
    base = results[config.baseline]
    summaries: dict[str, dict[str, Summary]] = {}
    comparisons: dict[str, dict[str, Comparison]] = {}
    paired: dict[str, dict[str, Comparison]] = {}
    for sid, rs in results.items():
        summaries[sid] = {}
        for m in metrics:
            xs = [_metric(r, m) for r in rs]
            summaries[sid][m] = Summary(statistics.fmean(xs), statistics.median(xs))
        if sid == config.baseline:
            continue
        comparisons[sid] = {}
        paired[sid] = {}
        for m in metrics:
            xs = [_metric(r, m) for r in rs]
            ys = [_metric(r, m) for r in base]
            mean_x, mean_y = statistics.fmean(xs), statistics.fmean(ys)
            mw = mann_whitney(xs, ys, TWO_SIDED)
            comparisons[sid][m] = Comparison(mw.statistic, mw.p, _direction(mean_x, mean_y), _gain(mean_x, mean_y))
            if config.paired:
                wx = wilcoxon(list(zip(xs, ys)), TWO_SIDED)
                paired[sid][m] = Comparison(wx.statistic, wx.p, _direction(mean_x, mean_y), _gain(mean_x, mean_y))

    normalized = {
        m: normalize({sid: [_metric(r, m) for r in rs] for sid, rs in results.items()})
        for m in metrics
        if m != "faults"
    }
    detections = {sid: sum(r.detected for r in rs) for sid, rs in results.items()}

    equal: dict[str, EqualBudget] = {}
    if config.equal_budget:
        harness = config.harness()
        baseline_cfg = next(s for s in config.strategies if s.id == config.baseline)
        for sid in results:
            if sid == config.baseline:
                continue
            equal[sid] = equal_coverage_budget(
                harness,
                baseline_cfg,
                summaries[sid]["branches"].mean,
                runs=config.equal_budget_runs,
                cap=int(config.budget.amount) * EQUAL_BUDGET_CAP_FACTOR,
                base_seed=config.base_seed,
                max_length=config.max_length,
            )
    return ExperimentReport(config, results, summaries, detections, comparisons, paired, normalized, equal)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    return analyze(config, _run_trials(config))


def equal_coverage_budget(
    harness: Harness,
    baseline: StrategyConfig,
    target: float,
    runs: int = EQUAL_BUDGET_RUNS,
    cap: int = 1_000_000,
    *,
    base_seed: int = 0,
    max_length: int = DEFAULT_MAX_LENGTH,
) -> EqualBudget:
    """Mean actions ``baseline`` needs to reach ``target`` distinct branches.

    Runs that hit ``cap`` actions first count as did-not-finish and are left
    out of the mean.
    """
    if target < 0:
        raise ValueError("target must be non-negative")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if target == 0:
        return EqualBudget(0.0, 0, runs, target)

    def reached(registry) -> bool:
        return len(registry.branches) >= target

    spent = []
    dnf = 0
    for i in range(runs):
        r = run_trial(harness, baseline, Budget.actions(cap), seed=base_seed + i, max_length=max_length, stop_when=reached)
        if r.branches is not None and r.branches >= target:
            spent.append(r.actions)
        else:
            dnf += 1
    return EqualBudget(statistics.fmean(spent) if spent else None, dnf, runs, target)


# -- output -------------------------------------------------------------------


def _fmt(x: float | None, digits: int = 2) -> str:
    return "-" if x is None else f"{x:.{digits}f}"


def _fmt_p(p: float) -> str:
    return f"{p:.4g}"


def _fmt_gain(c: Comparison) -> str:
    return "inf" if c.gain is None else f"{c.gain:+.1f}%"


def summary_csv(report: ExperimentReport) -> str:
    """Machine-readable summary: one row per (strategy, metric)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["strategy", "metric", "mean", "median", "gain_pct", "U", "p", "significant", "direction",
                "wilcoxon_W", "wilcoxon_p", "detections", "trials"])
    for sid in report.strategy_ids:
        for m in report.metrics():
            s = report.summaries[sid][m]
            c = report.comparisons.get(sid, {}).get(m)
            pw = report.paired.get(sid, {}).get(m)
            w.writerow([
                sid, m, _fmt(s.mean, 4), _fmt(s.median, 4),
                "" if c is None else ("inf" if c.gain is None else f"{c.gain:.4f}"),
                "" if c is None else _fmt(c.statistic, 1),
                "" if c is None else _fmt_p(c.p),
                "" if c is None else str(c.significant).lower(),
                "" if c is None else c.direction,
                "" if pw is None else _fmt(pw.statistic, 1),
                "" if pw is None else _fmt_p(pw.p),
                report.detections[sid],
                len(report.results[sid]),
            ])
    return buf.getvalue()


def trials_csv(report: ExperimentReport) -> str:
    """Per-trial rows, ready for box plots of raw and percent-of-max values."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cov = report.config.coverage_on
    w.writerow(["strategy", "trial", "seed", "branches", "statements", "actions", "tests", "faults",
                "branches_pct_max", "statements_pct_max"])
    for sid in report.strategy_ids:
        for i, r in enumerate(report.results[sid]):
            w.writerow([
                sid, i, r.seed,
                r.branches if cov else "-", r.statements if cov else "-",
                r.actions, r.tests, r.faults,
                _fmt(report.normalized["branches"][sid][i], 2) if cov else "-",
                _fmt(report.normalized["statements"][sid][i], 2) if cov else "-",
            ])
    return buf.getvalue()


def _cell(c: Comparison | None) -> str:
    if c is None:
        return "(baseline)"
    text = f"{_fmt_gain(c)} (p={_fmt_p(c.p)})"
    # significant differences in bold, the rest in italics
    return f"**{text}**" if c.significant else f"*{text}*"


def markdown_report(report: ExperimentReport) -> str:
    cfg = report.config
    budget = f"{int(cfg.budget.amount)} actions" if cfg.budget.kind == ACTIONS else f"{cfg.budget.amount:g} s"
    faults = ", ".join(f"{k}={'on' if v else 'off'}" for k, v in sorted(cfg.faults.items())) or "none"
    lines = [
        f"# Experiment: {cfg.harness_id}",
        "",
        f"- trials per strategy: {cfg.trials} (seeds {cfg.base_seed}..{cfg.base_seed + cfg.trials - 1})",
        f"- budget: {budget}",
        f"- baseline: {cfg.baseline}",
        f"- faults: {faults}",
        "",
        f"Gains are relative to {cfg.baseline} (Mann-Whitney, two-sided). "
        f"Bold marks p < {SIGNIFICANCE}; italics are not significant.",
        "",
    ]
    header = ["strategy"]
    if cfg.coverage_on:
        header += ["branch %", "stmt %"]
    header += ["faults %"]
    if cfg.equal_budget:
        header += ["=branch"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for sid in report.strategy_ids:
        comps = report.comparisons.get(sid, {})
        row = [sid]
        for m in report.metrics():
            row.append(_cell(comps.get(m)))
        if cfg.equal_budget:
            eq = report.equal_budget.get(sid)
            if eq is None:
                row.append("")
            elif eq.mean_actions is None:
                row.append(f"DNF ({eq.dnf}/{eq.runs})")
            else:
                row.append(f"{eq.mean_actions:.0f}" + (f" ({eq.dnf} DNF)" if eq.dnf else ""))
        lines.append("| " + " | ".join(row) + " |")

    lines += ["", "## Per-strategy values", ""]
    cols = ["strategy"] + [f"{m} mean" for m in report.metrics()] + [f"{m} median" for m in report.metrics()]
    cols += ["detections"]
    lines.append("| " + " | ".join(cols) + " |")
    lines.append("|" + "---|" * len(cols))
    for sid in report.strategy_ids:
        s = report.summaries[sid]
        row = [sid] + [_fmt(s[m].mean) for m in report.metrics()] + [_fmt(s[m].median) for m in report.metrics()]
        row += [f"{report.detections[sid]}/{len(report.results[sid])}"]
        lines.append("| " + " | ".join(row) + " |")

    if cfg.paired:
        lines += ["", f"## Paired Wilcoxon vs {cfg.baseline}", ""]
        lines.append("| strategy | " + " | ".join(report.metrics()) + " |")
        lines.append("|" + "---|" * (len(report.metrics()) + 1))
        for sid in report.strategy_ids:
            if sid == cfg.baseline:
                continue
            row = [sid] + [f"W={_fmt(report.paired[sid][m].statistic, 1)} p={_fmt_p(report.paired[sid][m].p)}"
                           for m in report.metrics()]
            lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def write_report(report: ExperimentReport, directory: str | Path) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "summary.csv": summary_csv(report),
        "trials.csv": trials_csv(report),
        "report.md": markdown_report(report),
    }
    paths = []
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        paths.append(path)
    return paths


# -- configuration files --------------------------------------------------------

_TOP_KEYS = {
    "harness", "strategies", "trials", "budget-actions", "budget-seconds", "base-seed", "baseline",
    "faults", "coverage", "max-length", "paired", "equal-budget", "equal-budget-runs", "jobs",
    "locmap", "static-loc", "sampling-budget", "sampling-seed", "output",
}
_STRATEGY_KEYS = {"kind", "name", "swarm-disable-prob", "swarm-force-parents",
                  "population-cap", "fresh-prob", "elite-k", "op-weights"}


def _on_off(value: Any, key: str) -> bool:
    if isinstance(value, bool):
        return value
    if value in ("on", "off"):
        return value == "on"
    raise ConfigError(f"{key}: expected on/off or a boolean, got {value!r}")


def _strategy(entry: Any, table: ProbabilityTable | None) -> StrategyConfig:
    if isinstance(entry, str):
        entry = {"kind": entry}
    if not isinstance(entry, dict):
        raise ConfigError(f"strategy entries are names or tables, got {entry!r}")
    unknown = set(entry) - _STRATEGY_KEYS
    if unknown:
        raise ConfigError(f"unknown strategy keys: {', '.join(sorted(unknown))}")
    kind = entry.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown strategy kind {kind!r}; expected one of {', '.join(KINDS)}")
    ga_args = {}
    for key, attr in (("population-cap", "population_cap"), ("fresh-prob", "fresh_prob"), ("elite-k", "elite_k")):
        if key in entry:
            ga_args[attr] = entry[key]
    if "op-weights" in entry:
        ga_args["op_weights"] = tuple(float(w) for w in entry["op-weights"])
    try:
        return StrategyConfig(
            kind=kind,
            table=table if kind in LOC_KINDS else None,
            swarm_disable_prob=float(entry.get("swarm-disable-prob", 0.5)),
            swarm_force_parents=bool(entry.get("swarm-force-parents", True)),
            ga=GaParams(**ga_args),
            name=entry.get("name"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_from_mapping(doc: Mapping[str, Any], base_dir: str | Path = ".") -> ExperimentConfig:
    """Build a config from parsed TOML; relative paths resolve against ``base_dir``."""
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    if "harness" not in doc:
        raise ConfigError("missing 'harness'")
    harness_id = doc["harness"]
    faults = {k: _on_off(v, f"faults.{k}") for k, v in dict(doc.get("faults", {})).items()}
    try:
        harness = get_harness(harness_id, faults or None)
    except UnknownHarness:
        raise ConfigError(f"unknown harness {harness_id!r}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    entries = doc.get("strategies", ["random", "loc"])
    kinds = [e if isinstance(e, str) else e.get("kind") for e in entries]
    table = None
    if any(k in LOC_KINDS for k in kinds):
        table = _loc_table(doc, harness, Path(base_dir))
    strategies = tuple(_strategy(e, table) for e in entries)

    if "budget-actions" in doc and "budget-seconds" in doc:
        raise ConfigError("give either budget-actions or budget-seconds, not both")
    try:
        budget = (
            Budget.seconds(doc["budget-seconds"]) if "budget-seconds" in doc
            else Budget.actions(doc.get("budget-actions", 10_000))
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(
        harness_id=harness_id,
        strategies=strategies,
        trials=int(doc.get("trials", 100)),
        budget=budget,
        base_seed=int(doc.get("base-seed", 0)),
        baseline=doc.get("baseline", "random"),
        faults=faults,
        coverage_on=_on_off(doc.get("coverage", True), "coverage"),
        max_length=int(doc.get("max-length", DEFAULT_MAX_LENGTH)),
        paired=bool(doc.get("paired", False)),
        equal_budget=bool(doc.get("equal-budget", False)),
        equal_budget_runs=int(doc.get("equal-budget-runs", EQUAL_BUDGET_RUNS)),
        jobs=int(doc.get("jobs", 1)),
    )


def _loc_table(doc: Mapping[str, Any], harness: Harness, base_dir: Path) -> ProbabilityTable:
    if "locmap" in doc:
        path = base_dir / doc["locmap"]
        if not path.exists():
            raise ConfigError(f"LOC map not found: {path}")
        return loc_distribution(load_locmap(path, harness))
    if doc.get("static-loc", False):
        return loc_distribution(static_loc(harness.function_loc, harness.static_bindings, harness.class_ids, harness.id))
    budget = int(doc.get("sampling-budget", DEFAULT_SAMPLING_BUDGET))
    return loc_distribution(sample_loc(harness, budget, int(doc.get("sampling-seed", 0))))


def load_config(path: str | Path) -> tuple[ExperimentConfig, str | None]:
    """Parse a TOML experiment file; returns the config and its ``output`` entry."""
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return config_from_mapping(doc, path.parent), doc.get("output")
