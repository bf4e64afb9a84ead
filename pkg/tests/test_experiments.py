"""Experiment runs, comparisons, the equal-coverage budget and report output."""

from __future__ import annotations

import csv
import io
from dataclasses import replace

import pytest

from locbias.bench import get_harness
from locbias.experiments import (
    EQUAL_BUDGET_RUNS,
    Comparison,
    ConfigError,
    ExperimentConfig,
    analyze,
    config_from_mapping,
    equal_coverage_budget,
    load_config,
    markdown_report,
    normalize,
    run_experiment,
    summary_csv,
    trials_csv,
    write_report,
)
from locbias.runner import Budget
from locbias.strategies import RANDOM, SWARM, StrategyConfig


def _small(**kw) -> ExperimentConfig:
    base = dict(
        harness_id="heap",
        strategies=(StrategyConfig(RANDOM), StrategyConfig(SWARM)),
        trials=6,
        budget=Budget.actions(800),
        faults={"sift": True},
        paired=True,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_needs_two_trials(self):
        with pytest.raises(ConfigError):
            _small(trials=1)

    def test_baseline_must_exist(self):
        with pytest.raises(ConfigError):
            _small(baseline="ga")

    def test_duplicate_ids(self):
        with pytest.raises(ConfigError):
            _small(strategies=(StrategyConfig(RANDOM), StrategyConfig(RANDOM)))

    def test_equal_budget_needs_coverage(self):
        with pytest.raises(ConfigError):
            _small(equal_budget=True, coverage_on=False)

    def test_seeds_are_shared(self):
        assert _small(base_seed=40).seeds == [40, 41, 42, 43, 44, 45]


class TestSelfComparison:
    @pytest.fixture(scope="class")
    @staticmethod
    def report():
        cfg = _small(strategies=(StrategyConfig(RANDOM), StrategyConfig(RANDOM, name="random-again")))
        return run_experiment(cfg)

    def test_p_is_one_and_gain_zero(self, report):
        for m in report.metrics():
            c = report.comparisons["random-again"][m]
            assert c.p == pytest.approx(1.0)
            assert c.gain == 0.0 and c.direction == "="
            assert not c.significant
            assert report.paired["random-again"][m].p == 1.0

    def test_results_identical(self, report):
        a, b = report.results["random"], report.results["random-again"]
        assert [r.branches for r in a] == [r.branches for r in b]
        assert [r.signatures for r in a] == [r.signatures for r in b]


class TestSignificance:
    @pytest.mark.parametrize("p, bold", [(0.049, True), (0.05, False), (0.5, False)])
    def test_threshold(self, p, bold):
        assert Comparison(0.0, p, "+", 10.0).significant is bold

    def test_markdown_bold_and_italic(self):
        cfg = _small()
        report = run_experiment(cfg)
        report.comparisons["swarm"]["branches"] = Comparison(1.0, 0.01, "+", 12.5)
        report.comparisons["swarm"]["statements"] = Comparison(1.0, 0.2, "-", -3.0)
        text = markdown_report(report)
        assert "**+12.5% (p=0.01)**" in text
        assert "*-3.0% (p=0.2)*" in text and "**-3.0%" not in text


class TestNormalization:
    def test_max_maps_to_100(self):
        out = normalize({"a": [10, 40], "b": [20, 5]})
        assert out == {"a": [25.0, 100.0], "b": [50.0, 12.5]}

    def test_all_zero(self):
        assert normalize({"a": [0, 0]}) == {"a": [100.0, 100.0]}

    def test_report_column(self):
        report = run_experiment(_small())
        pct = report.normalized["branches"]
        assert max(v for vs in pct.values() for v in vs) == 100.0
        best = max(r.branches for rs in report.results.values() for r in rs)
        for sid, rs in report.results.items():
            for r, v in zip(rs, pct[sid]):
                assert (v == 100.0) == (r.branches == best)


class TestEqualCoverageBudget:
    def test_target_zero(self):
        eq = equal_coverage_budget(get_harness("avl"), StrategyConfig(RANDOM), 0)
        assert eq.mean_actions == 0 and eq.dnf == 0

    def test_unreachable_target(self):
        harness = get_harness("heap")
        eq = equal_coverage_budget(harness, StrategyConfig(RANDOM), harness.probe_totals[0] + 1, runs=4, cap=300)
        assert eq.dnf == 4 and eq.mean_actions is None

    def test_default_runs(self):
        assert EQUAL_BUDGET_RUNS == 30
        harness = get_harness("heap")
        eq = equal_coverage_budget(harness, StrategyConfig(RANDOM), 3, cap=2000)
        assert eq.runs == 30 and eq.dnf == 0
        assert 0 < eq.mean_actions < 2000

    def test_mean_grows_with_target(self):
        harness = get_harness("avl")
        low = equal_coverage_budget(harness, StrategyConfig(RANDOM), 4, runs=5, cap=5000)
        high = equal_coverage_budget(harness, StrategyConfig(RANDOM), 10, runs=5, cap=5000)
        assert low.mean_actions <= high.mean_actions

    def test_in_report(self):
        report = run_experiment(_small(equal_budget=True, equal_budget_runs=3))
        eq = report.equal_budget["swarm"]
        assert eq.runs == 3 and eq.target == report.summaries["swarm"]["branches"].mean
        assert "=branch" in markdown_report(report)


class TestOutputs:
    def test_reproducible(self):
        a, b = run_experiment(_small()), run_experiment(_small())
        assert summary_csv(a) == summary_csv(b)
        assert trials_csv(a) == trials_csv(b)
        assert markdown_report(a) == markdown_report(b)

    def test_parallel_matches_serial(self):
        serial = run_experiment(_small())
        parallel = run_experiment(_small(jobs=2))
        assert summary_csv(serial) == summary_csv(parallel)

    def test_summary_rows(self):
        report = run_experiment(_small())
        rows = list(csv.DictReader(io.StringIO(summary_csv(report))))
        assert [(r["strategy"], r["metric"]) for r in rows] == [
            (s, m) for s in ("random", "swarm") for m in ("branches", "statements", "faults")
        ]
        assert all(r["p"] == "" for r in rows if r["strategy"] == "random")

    def test_coverage_off(self):
        report = run_experiment(_small(coverage_on=False))
        assert report.metrics() == ("faults",)
        rows = list(csv.DictReader(io.StringIO(trials_csv(report))))
        assert all(r["branches"] == "-" for r in rows)

    def test_write_report(self, tmp_path):
        paths = write_report(run_experiment(_small()), tmp_path / "out")
        assert sorted(p.name for p in paths) == ["report.md", "summary.csv", "trials.csv"]

    def test_analyze_reuses_results(self):
        report = run_experiment(_small())
        again = analyze(replace(report.config, paired=False), report.results)
        assert again.paired["swarm"] == {}
        assert again.comparisons == report.comparisons


class TestConfigFiles:
    def test_defaults(self):
        cfg = config_from_mapping({"harness": "heap", "strategies": ["random", "swarm"]})
        assert cfg.trials == 100 and cfg.budget == Budget.actions(10_000) and cfg.baseline == "random"

    def test_loc_strategy_samples_a_map(self):
        cfg = config_from_mapping(
            {"harness": "avl", "strategies": ["random", "loc"], "sampling-budget": 500, "trials": 2}
        )
        table = cfg.strategies[1].table
        assert table is not None and abs(sum(table.probs.values()) - 1) < 1e-9

    @pytest.mark.parametrize(
        "doc",
        [
            {"strategies": ["random"]},
            {"harness": "nope"},
            {"harness": "avl", "colour": "red"},
            {"harness": "avl", "strategies": [{"kind": "random", "speed": 2}]},
            {"harness": "avl", "strategies": ["bogus"]},
            {"harness": "avl", "budget-actions": 10, "budget-seconds": 1.0},
            {"harness": "avl", "budget-actions": 0},
            {"harness": "avl", "faults": {"rotation": "maybe"}},
            {"harness": "avl", "locmap": "missing.locmap"},
        ],
    )
    def test_rejected(self, doc):
        with pytest.raises(ConfigError):
            config_from_mapping(doc)

    def test_toml_file(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text(
            'harness = "avl"\nstrategies = ["random", {kind = "swarm", name = "sw"}]\n'
            'trials = 3\nbudget-actions = 200\noutput = "rep"\n[faults]\nrotation = "on"\n'
        )
        cfg, out = load_config(path)
        assert out == "rep" and [s.id for s in cfg.strategies] == ["random", "sw"]
        assert cfg.faults == {"rotation": True}

    def test_bad_toml(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text("harness = \n")
        with pytest.raises(ConfigError):
            load_config(path)
