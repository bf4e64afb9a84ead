"""Acceptance checks, one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are printed with output
capture bypassed) or ``python3 tests/test_acceptance.py`` for the lines alone.
The Monte-Carlo criteria take several minutes in total.
"""

from __future__ import annotations

import math
import random
import sys
from collections import Counter
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import contrived_harness  # noqa: E402
from test_stats import brute_mw, brute_wilcoxon, tie_free_pair  # noqa: E402

from locbias.bench import all_faults_on, get_harness  # noqa: E402
from locbias.cli import main  # noqa: E402
from locbias.locmap import loc_distribution, sample_loc  # noqa: E402
from locbias.runner import Budget, OverheadReport, overhead_ratios, run_trial  # noqa: E402
from locbias.stats import GREATER, TWO_SIDED, mann_whitney, wilcoxon  # noqa: E402
from locbias.strategies import LOC, RANDOM, StrategyConfig, pick_class, swarm_config  # noqa: E402

TRIALS = 100
ACTIONS = 10_000
ALPHA = 0.05


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    capture = _capture_manager()
    if capture is not None:
        with capture.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)
    assert ok, line


_PLUGIN_MANAGER = None


def _capture_manager():
    return None if _PLUGIN_MANAGER is None else _PLUGIN_MANAGER.getplugin("capturemanager")


@pytest.fixture(autouse=True)
def _bind_config(pytestconfig):
    global _PLUGIN_MANAGER
    _PLUGIN_MANAGER = pytestconfig.pluginmanager
    yield
    _PLUGIN_MANAGER = None


def paired_detection(harness, cfg_a, cfg_b, trials=TRIALS, actions=ACTIONS):
    """Per-seed detection indicators (0/1) for two strategies on shared seeds."""
    a, b = [], []
    for seed in range(trials):
        a.append(int(run_trial(harness, cfg_a, Budget.actions(actions), seed=seed, coverage_on=False).detected))
        b.append(int(run_trial(harness, cfg_b, Budget.actions(actions), seed=seed, coverage_on=False).detected))
    return a, b


# -- 1-5: exact reproduction and oracle checks ----------------------------------


def test_criterion_1_worked_examples():
    got1 = loc_distribution({"a": 0, "b": 30, "c": 20}).probs
    got2 = loc_distribution({"a": 0, "b": 0, "c": 30, "d": 20, "e": 14}).probs
    want1 = {"a": 0.20, "b": 0.48, "c": 0.32}
    want2 = {"a": 0.100, "b": 0.100, "c": 0.375, "d": 0.250, "e": 0.175}
    err = max(abs(got1[k] - v) for k, v in want1.items())
    err = max(err, max(abs(got2[k] - v) for k, v in want2.items()))
    report(1, err <= 1e-12, f"max abs error {err:.2e} (tol 1e-12)")


def test_criterion_2_mass_split():
    rng = random.Random(2)
    worst_sum = worst_split = 0.0
    covariant = True
    for _ in range(1000):
        n = rng.randint(1, 50)
        means = {f"c{i}": (0.0 if rng.random() < 0.3 else rng.uniform(0.5, 500.0)) for i in range(n)}
        table = loc_distribution(means)
        worst_sum = max(worst_sum, abs(sum(table.probs.values()) - 1.0))
        zero = [c for c, m in means.items() if m == 0]
        if zero and len(zero) < n:
            worst_split = max(worst_split, abs(sum(table[c] for c in zero) - 0.2))
        for k in (0.5, 3, 1000):
            scaled = loc_distribution({c: m * k for c, m in means.items()})
            covariant &= all(round(scaled[c], 12) == round(table[c], 12) for c in means)
    ok = worst_sum <= 1e-9 and worst_split <= 1e-9 and covariant
    report(2, ok, f"1000 maps: max |sum-1| {worst_sum:.1e}, max |zero mass-0.2| {worst_split:.1e}, "
                  f"scale-covariant={covariant}")


def test_criterion_3_sampling():
    harness = contrived_harness()
    locmap = sample_loc(harness, 3000, seed=3)
    means = locmap.means()
    ok = means == {"f": 30.0, "g": 20.0, "int": 0.0} and locmap.entries["f"].samples > 0
    report(3, ok, f"means {means} (f calls its function 40x per step)")


def test_criterion_4_statistics():
    rng = random.Random(20)
    mw_ok = 0
    for _ in range(200):
        xs, ys = tie_free_pair(rng, rng.randint(1, 5), rng.randint(1, 5))
        r = mann_whitney(xs, ys)
        mw_ok += r.exact and r.p_exact == brute_mw(xs, ys, TWO_SIDED)
    rng = random.Random(21)
    wx_ok = 0
    for _ in range(200):
        n = rng.randint(1, 10)
        diffs = [v * rng.choice((-1, 1)) for v in rng.sample(range(1, 100), n)]
        r = wilcoxon(differences=diffs)
        wx_ok += r.exact and r.p_exact == brute_wilcoxon(diffs, TWO_SIDED)
    report(4, mw_ok == 200 and wx_ok == 200, f"exact rational agreement: Mann-Whitney {mw_ok}/200, Wilcoxon {wx_ok}/200")


def test_criterion_5_distribution():
    harness = get_harness("avl")
    table = loc_distribution(sample_loc(harness, 10_000, seed=5))
    rng = random.Random(5)
    enabled = table.class_ids
    counts = Counter(pick_class(table, enabled, rng) for _ in range(100_000))
    pick_err = max(abs(counts[c] / 100_000 - table[c]) for c in enabled)

    # swarm fraction on a harness whose dependency closure rarely forces classes back on
    sl = get_harness("sortedlist")
    rng = random.Random(55)
    drawn = [swarm_config(sl, rng).drawn for _ in range(10_000)]
    fraction = sum(len(d) for d in drawn) / (10_000 * len(sl.class_ids))
    ok = pick_err <= 0.01 and abs(fraction - 0.5) <= 0.02
    report(5, ok, f"pick_class max abs error {pick_err:.4f} (tol 0.01); "
                  f"swarm enabled fraction before closure {fraction:.4f} (0.5 +/- 0.02)")


# -- 6-9: Monte-Carlo checks --------------------------------------------------------


def test_criterion_6_directional_gain():
    lines, ok = [], True
    for hid in ("avl", "heap"):
        harness = all_faults_on(hid)
        table = loc_distribution(sample_loc(harness, 10_000, seed=0))
        loc, rnd = paired_detection(harness, StrategyConfig(LOC, table=table), StrategyConfig(RANDOM))
        p = wilcoxon(list(zip(loc, rnd)), GREATER).p
        good = sum(loc) > sum(rnd) and p < ALPHA
        ok &= good
        lines.append(f"{hid}: loc {sum(loc)}/{TRIALS} vs random {sum(rnd)}/{TRIALS}, one-sided p={p:.3g}")
    report(6, ok, "; ".join(lines))


def test_criterion_7_adverse_case():
    harness = get_harness("codec")
    table = loc_distribution(sample_loc(harness, 10_000, seed=0))
    loc_cfg, rnd_cfg = StrategyConfig(LOC, table=table), StrategyConfig(RANDOM)
    loc, rnd = [], []
    for seed in range(TRIALS):
        loc.append(run_trial(harness, loc_cfg, Budget.actions(ACTIONS), seed=seed).branches)
        rnd.append(run_trial(harness, rnd_cfg, Budget.actions(ACTIONS), seed=seed).branches)
    diff = sum(loc) / TRIALS - sum(rnd) / TRIALS
    p = wilcoxon(list(zip(loc, rnd)), TWO_SIDED).p
    ok = p >= ALPHA or diff < 0
    report(7, ok, f"codec branches: loc mean {sum(loc) / TRIALS:.2f} vs random {sum(rnd) / TRIALS:.2f} "
                  f"(diff {diff:+.2f}), two-sided p={p:.3g}")


def test_criterion_8_overhead():
    harness = get_harness("sortedlist")
    rep = overhead_ratios(harness, StrategyConfig(RANDOM), seconds=1.0, repetitions=10, seed=0)
    semantics = all(
        math.isclose(r, off / on) for r, off, on in zip(rep.ratios, rep.actions_off, rep.actions_on)
    ) and OverheadReport((30,), (20,)).mean == 1.5
    ok = rep.mean >= 1.0 and len(rep.ratios) == 10 and semantics
    report(8, ok, f"sortedlist mean ratio (actions without / actions with) {rep.mean:.3f} over 10 reps, "
                  f"range {min(rep.ratios):.3f}..{max(rep.ratios):.3f}")


def test_criterion_9_stale_map():
    harness = all_faults_on("avl")
    fresh = sample_loc(harness, 10_000, seed=0)
    rng = random.Random(9)
    factors = {cid: rng.choice((0.8, 1.2)) for cid in fresh.entries}
    stale = fresh.scaled(factors)
    a, b = paired_detection(
        harness,
        StrategyConfig(LOC, table=loc_distribution(fresh)),
        StrategyConfig(LOC, table=loc_distribution(stale)),
    )
    p = wilcoxon(list(zip(a, b)), TWO_SIDED).p
    report(9, p >= ALPHA, f"avl detections fresh {sum(a)}/{TRIALS} vs perturbed {sum(b)}/{TRIALS}, "
                          f"two-sided p={p:.3g}")


# -- 10: byte-level determinism of the CLI ------------------------------------------


def test_criterion_10_determinism(tmp_path, capsys):
    locmap = tmp_path / "avl.locmap"
    main(["sample", "avl", "--budget-actions", "5000", "--seed", "1", "--out", str(locmap)])
    config = tmp_path / "exp.toml"
    config.write_text(
        'harness = "avl"\nstrategies = ["random", "loc", "swarm", "ga"]\ntrials = 10\n'
        'budget-actions = 2000\nlocmap = "avl.locmap"\npaired = true\nequal-budget = true\n'
        'equal-budget-runs = 5\n[faults]\nrotation = "on"\n'
    )
    capsys.readouterr()

    def primary_outputs(tag):
        outs = []
        for strategy in ("random", "loc", "swarm-loc", "ga-loc"):
            fails = tmp_path / f"fails-{tag}-{strategy}"
            code = main(["run", "avl", "--strategy", strategy, "--locmap", str(locmap), "--budget-actions", "5000",
                         "--seed", "3", "--all-faults", "--failures-dir", str(fails)])
            files = sorted((p.name, p.read_bytes()) for p in fails.glob("*")) if fails.exists() else []
            outs.append((code, capsys.readouterr().out, files))
        rep = tmp_path / f"rep-{tag}"
        code = main(["experiment", str(config), "--out", str(rep)])
        outs.append((code, capsys.readouterr().out, sorted((p.name, p.read_bytes()) for p in rep.iterdir())))
        return outs

    first, second = primary_outputs("a"), primary_outputs("b")
    report(10, first == second, f"{len(first)} invocations (run x4, experiment x1) byte-identical on repeat")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
