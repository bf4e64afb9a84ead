"""LOC maps: sampling, the static provider, the probability table, persistence."""

from __future__ import annotations

import json
import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locbias.bench import avl_harness
from locbias.locmap import (
    LocEntry,
    LocMap,
    LocMapError,
    load_locmap,
    loc_distribution,
    sample_loc,
    save_locmap,
    static_loc,
)


class TestWorkedExamples:
    def test_three_classes(self):
        table = loc_distribution({"int": 0, "f": 30, "g": 20})
        expected = {"int": 0.20, "f": 0.48, "g": 0.32}
        for cid, p in expected.items():
            assert abs(table[cid] - p) <= 1e-12
        assert table.m0 == 1 and table.m1 == 50

    def test_five_classes(self):
        table = loc_distribution({"int": 0, "ch": 0, "f": 30, "g": 20, "h": 14})
        expected = {"int": 0.1, "ch": 0.1, "f": 0.375, "g": 0.25, "h": 0.175}
        for cid, p in expected.items():
            assert abs(table[cid] - p) <= 1e-12

    def test_all_zero_is_uniform(self):
        table = loc_distribution({"a": 0, "b": 0, "c": 0, "d": 0})
        assert set(table.probs.values()) == {0.25}

    def test_no_zero_class_is_proportional(self):
        table = loc_distribution({"a": 10, "b": 30})
        assert table.probs == {"a": 0.25, "b": 0.75}

    def test_empty_map(self):
        with pytest.raises(LocMapError):
            loc_distribution({})


means_maps = st.dictionaries(
    st.text("abcdefghij", min_size=1, max_size=4),
    st.one_of(st.just(0.0), st.floats(min_value=0.5, max_value=500, allow_nan=False)),
    min_size=1,
    max_size=50,
)


@settings(max_examples=300, deadline=None)
@given(means_maps)
def test_table_invariants(means):
    table = loc_distribution(means)
    assert math.isclose(sum(table.probs.values()), 1.0, abs_tol=1e-9)
    zero = [c for c, m in means.items() if m == 0]
    positive = [c for c, m in means.items() if m > 0]
    if zero and positive:
        assert abs(sum(table[c] for c in zero) - 0.2) <= 1e-9
        assert abs(sum(table[c] for c in positive) - 0.8) <= 1e-9
    for a in positive:
        for b in positive:
            if means[a] > means[b]:
                assert table[a] > table[b]
    # every class stays reachable
    assert min(table.probs.values()) > 0


@settings(max_examples=100, deadline=None)
@given(means_maps, st.sampled_from([0.5, 3, 1000]))
def test_scale_covariance(means, k):
    base = loc_distribution(means)
    scaled = loc_distribution({c: m * k for c, m in means.items()})
    assert {c: round(p, 12) for c, p in base.probs.items()} == {c: round(p, 12) for c, p in scaled.probs.items()}


class TestSampling:
    def test_contrived_means(self, contrived):
        locmap = sample_loc(contrived, budget=2000, seed=1)
        assert locmap.mean("int") == 0 and locmap.entries["int"].samples > 0
        assert locmap.mean("g") == 20
        # f is entered 40 times per step and still counts once
        assert locmap.mean("f") == 30
        assert not locmap.unsampled

    def test_mixed_class_converges(self, contrived_mixed):
        locmap = sample_loc(contrived_mixed, budget=44_000, seed=5)
        assert locmap.entries["mixed"].samples >= 10_000
        assert abs(locmap.mean("mixed") - 22) <= 1

    def test_unsampled_first(self, contrived):
        trace = []
        sample_loc(contrived, budget=500, seed=2, trace=trace)
        seen = set()
        for chosen, fresh in trace:
            if fresh:
                assert chosen in fresh
            seen.add(chosen)
        assert seen == set(contrived.class_ids)

    def test_deterministic(self, contrived_mixed):
        assert sample_loc(contrived_mixed, 3000, seed=9) == sample_loc(contrived_mixed, 3000, seed=9)

    def test_seconds_budget(self, contrived):
        locmap = sample_loc(contrived, seconds=0.05, seed=0)
        assert locmap.mean("f") == 30

    def test_sampled_avl_map(self):
        locmap = sample_loc(avl_harness(), budget=2000, seed=1)
        assert set(locmap.class_ids) == {"int", "avl_new", "avl_insert", "avl_delete", "avl_display"}
        assert locmap.mean("int") == 0
        assert locmap.mean("avl_insert") > locmap.mean("avl_new") > 0


class TestStatic:
    def test_direct_binding(self, contrived):
        locmap = static_loc(contrived.function_loc, contrived.static_bindings, contrived.class_ids)
        assert locmap.mean("f") == 30
        # g's call into h is not followed
        assert locmap.mean("g") == 6
        assert locmap.mean("int") == 0 and "int" in locmap.unsampled

    def test_unknown_function(self):
        with pytest.raises(LocMapError):
            static_loc({}, {"c": {"nope"}})


class TestPersistence:
    def test_round_trip(self, tmp_path, contrived):
        locmap = sample_loc(contrived, 500, seed=0)
        path = tmp_path / "c.locmap"
        save_locmap(locmap, path)
        assert load_locmap(path) == locmap
        doc = json.loads(path.read_text())
        assert doc["version"] == 1 and doc["harness-id"] == "contrived"
        assert [c["id"] for c in doc["classes"]] == sorted(locmap.class_ids)

    def test_retired_and_new_classes(self, tmp_path, contrived):
        stale = LocMap({"f": LocEntry(30, 3), "old_op": LocEntry(12, 2)}, harness_id="contrived")
        path = tmp_path / "stale.locmap"
        save_locmap(stale, path)
        with pytest.warns(UserWarning, match="old_op"):
            loaded = load_locmap(path, contrived)
        assert "old_op" not in loaded.class_ids
        assert {"g", "int"} <= loaded.unsampled
        assert math.isclose(sum(loc_distribution(loaded).probs.values()), 1.0)

    @pytest.mark.parametrize("text", ["{", "[]", '{"version": 2, "classes": []}', '{"version": 1, "classes": [{"id": "x"}]}'])
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "bad.locmap"
        path.write_text(text)
        with pytest.raises(LocMapError):
            load_locmap(path)

    def test_matching_harness_no_warning(self, tmp_path, contrived):
        path = tmp_path / "ok.locmap"
        save_locmap(sample_loc(contrived, 200), path)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            load_locmap(path, contrived)


def test_scaled_map():
    locmap = LocMap({"a": LocEntry(10, 1), "b": LocEntry(0, 1)})
    assert locmap.scaled({"a": 1.2}).means() == {"a": 12, "b": 0}
