"""Budgeted trials, dedup, exemplar files and the overhead ratio."""

from __future__ import annotations

import csv
import io

import pytest

from locbias.bench import all_faults_on, get_harness
from locbias.harness import (
    SUT_CALL,
    VALUE_INIT,
    ActionClassSpec,
    FaultSignature,
    Harness,
    PoolSpec,
    parse_testcase,
    read_comments,
)
from locbias.locmap import loc_distribution, sample_loc
from locbias.runner import (
    CSV_FIELDS,
    Budget,
    OverheadReport,
    TrialRun,
    measure_overhead,
    overhead_ratios,
    results_csv,
    run_trial,
    signature_filename,
    write_failing_tests,
)
from locbias.strategies import GA, GA_LOC, LOC, RANDOM, SWARM, SWARM_LOC, StrategyConfig


def _configs(harness):
    table = loc_distribution(sample_loc(harness, 1500, seed=0))
    return [
        StrategyConfig(RANDOM),
        StrategyConfig(LOC, table=table),
        StrategyConfig(SWARM),
        StrategyConfig(SWARM_LOC, table=table),
        StrategyConfig(GA),
        StrategyConfig(GA_LOC, table=table),
    ]


class TestBudget:
    def test_validation(self):
        with pytest.raises(ValueError):
            Budget.actions(0)
        with pytest.raises(ValueError):
            Budget("steps", 3)

    def test_single_action(self):
        r = run_trial(get_harness("avl"), StrategyConfig(RANDOM), Budget.actions(1))
        assert r.actions == 1 and r.tests == 1

    @pytest.mark.parametrize("n", [1, 57, 1000])
    def test_exact_action_count(self, n):
        harness = all_faults_on("sortedlist")
        for cfg in _configs(harness):
            assert run_trial(harness, cfg, Budget.actions(n), seed=2).actions == n

    def test_seconds_budget(self):
        r = run_trial(get_harness("heap"), StrategyConfig(RANDOM), Budget.seconds(0.05))
        assert r.actions > 0 and r.wall_time >= 0.05


class TestDeterminism:
    def test_same_seed_same_result(self):
        harness = all_faults_on("avl")
        for cfg in _configs(harness):
            a = run_trial(harness, cfg, Budget.actions(3000), seed=5)
            b = run_trial(harness, cfg, Budget.actions(3000), seed=5)
            assert a == b
            assert results_csv([a]) == results_csv([b])

    def test_sliced_equals_straight(self):
        harness = all_faults_on("heap")
        cfg = StrategyConfig(GA)
        run = TrialRun(harness, cfg, seed=8)
        for stop in range(7, 2000, 113):
            run.advance(max_actions=stop)
        run.advance(max_actions=2000)
        assert run.result() == run_trial(harness, cfg, Budget.actions(2000), seed=8)


class TestFailures:
    def test_dedup_and_replay(self, tmp_path):
        harness = all_faults_on("sortedlist")
        r = run_trial(harness, StrategyConfig(RANDOM), Budget.actions(10_000), seed=1)
        assert r.faults == len(r.failing_tests) > 0
        assert len({sig for sig, _ in r.failing_tests}) == r.faults
        for sig, tc in r.failing_tests:
            assert harness.replay(tc).signature == sig
        paths = write_failing_tests(r, tmp_path, harness)
        assert sorted(p.name for p in paths) == sorted(signature_filename(s) for s in r.signatures)
        for path in paths:
            text = path.read_text()
            meta = read_comments(text)
            assert meta["harness"] == "sortedlist"
            assert harness.replay(parse_testcase(text, harness)).signature == FaultSignature.parse(meta["signature"])

    def test_keep_all(self):
        harness = all_faults_on("sortedlist")
        r = run_trial(harness, StrategyConfig(RANDOM), Budget.actions(10_000), seed=1, keep_all_failures=True)
        assert len(r.failing_tests) >= r.faults

    def test_same_failure_twice_counts_once(self):
        def bad(_):
            raise RuntimeError

        harness = Harness(
            "always",
            [PoolSpec("v", 1)],
            [
                ActionClassSpec("v", VALUE_INIT, produces="v", domain=(0,)),
                ActionClassSpec("bad", SUT_CALL, bad, consumes=("v",)),
            ],
        )
        r = run_trial(harness, StrategyConfig(RANDOM), Budget.actions(200), seed=0)
        assert r.signatures == {FaultSignature("raises:bad", "RuntimeError")}
        assert len(r.failing_tests) == 1 and r.tests > 1

    def test_fault_free_harness(self):
        r = run_trial(get_harness("exprparser"), StrategyConfig(RANDOM), Budget.actions(3000), seed=0)
        assert r.faults == 0 and not r.detected


class TestCoverageOff:
    def test_reports_no_snapshot(self):
        r = run_trial(get_harness("heap"), StrategyConfig(RANDOM), Budget.actions(500), coverage_on=False)
        assert r.coverage is None and r.branches is None
        row = r.csv_row()
        assert row["branches"] == "-" and row["statements"] == "-" and row["actions"] == 500

    def test_csv_columns(self):
        r = run_trial(get_harness("heap"), StrategyConfig(RANDOM), Budget.actions(500))
        rows = list(csv.DictReader(io.StringIO(results_csv([r], ["t0"]))))
        assert tuple(rows[0]) == CSV_FIELDS and rows[0]["trial"] == "t0"


class TestStopWhen:
    def test_stops_on_target(self):
        r = run_trial(
            get_harness("avl"), StrategyConfig(RANDOM), Budget.actions(50_000),
            stop_when=lambda reg: len(reg.branches) >= 5,
        )
        assert r.branches >= 5 and r.actions < 50_000


class TestOverhead:
    def test_report_semantics(self):
        report = OverheadReport((120, 90), (100, 90))
        assert report.ratios == (1.2, 1.0)
        assert report.mean == pytest.approx(1.1)

    def test_no_probe_sut_near_one(self):
        harness = Harness(
            "noop",
            [PoolSpec("v", 2)],
            [
                ActionClassSpec("v", VALUE_INIT, produces="v", domain=(1, 2)),
                ActionClassSpec("touch", SUT_CALL, lambda v: v, consumes=("v",)),
            ],
        )
        report = overhead_ratios(harness, StrategyConfig(RANDOM), seconds=0.05, repetitions=4)
        assert abs(report.mean - 1.0) <= 0.1

    def test_probe_dense_sut(self):
        ratio = measure_overhead(get_harness("sortedlist"), StrategyConfig(RANDOM), seconds=0.1, repetitions=3)
        assert ratio > 1.0

    def test_arguments(self):
        with pytest.raises(ValueError):
            overhead_ratios(get_harness("heap"), StrategyConfig(RANDOM), seconds=0.1, repetitions=0)
