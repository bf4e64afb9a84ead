"""Rank tests used to compare strategies.

Exact p-values come from counting distributions (returned as ``Fraction``
alongside the float); larger or tied samples fall back to the normal
approximation with tie and continuity corrections.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

TWO_SIDED = "two-sided"
GREATER = "greater"
LESS = "less"
ALTERNATIVES = (TWO_SIDED, GREATER, LESS)

MW_EXACT_MAX_PRODUCT = 64
WILCOXON_EXACT_MAX_N = 12


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p: float
    exact: bool
    p_exact: Fraction | None = None

    __test__ = False


def rankdata(values: Sequence[float]) -> list[float]:
    """1-based ranks; ties get the average of the ranks they span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2))


def _check_alt(alternative: str) -> None:
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")


def _u_distribution(n1: int, n2: int) -> list[int]:
    """counts[u] = number of rank arrangements giving U_x = u (no ties)."""
    # f[i][j] holds the count polynomial for i x-items and j y-items
    table = {(0, 0): [1]}
    for i in range(n1 + 1):
        for j in range(n2 + 1):
            if i == 0 and j == 0:
                continue
            size = i * j + 1
            counts = [0] * size
            # largest item is either an x (it beats all j ys) or a y
            if i > 0:
                prev = table[(i - 1, j)]
                for u, c in enumerate(prev):
                    counts[u + j] += c
            if j > 0:
                prev = table[(i, j - 1)]
                for u, c in enumerate(prev):
                    counts[u] += c
            table[(i, j)] = counts
    return table[(n1, n2)]


def _exact_p(counts: Sequence[int], observed2: int, center2: int, alternative: str, values2) -> Fraction:
    total = sum(counts)
    if alternative == TWO_SIDED:
        dist = abs(observed2 - center2)
        hit = sum(c for v, c in zip(values2, counts) if abs(v - center2) >= dist)
    elif alternative == GREATER:
        hit = sum(c for v, c in zip(values2, counts) if v >= observed2)
    else:
        hit = sum(c for v, c in zip(values2, counts) if v <= observed2)
    return Fraction(hit, total)


def mann_whitney(xs: Sequence[float], ys: Sequence[float], alternative: str = TWO_SIDED) -> TestResult:
    """Mann-Whitney U for independent samples; statistic is U of ``xs``.

    ``greater`` tests whether xs tend to be larger than ys.
    """
    _check_alt(alternative)
    n1, n2 = len(xs), len(ys)
    if n1 == 0 or n2 == 0:
        raise ValueError("empty sample")
    ranks = rankdata(list(xs) + list(ys))
    r1 = sum(ranks[:n1])
    u = r1 - n1 * (n1 + 1) / 2
    ties = Counter(ranks)
    tied = any(c > 1 for c in ties.values())

    if n1 * n2 <= MW_EXACT_MAX_PRODUCT and not tied:
        counts = _u_distribution(n1, n2)
        u_int = int(round(u))
        p = _exact_p(counts, 2 * u_int, n1 * n2, alternative, range(0, 2 * len(counts), 2))
        return TestResult(u, float(p), True, p)

    n = n1 + n2
    mu = n1 * n2 / 2
    tie_term = sum(t**3 - t for t in ties.values())
    var = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return TestResult(u, 1.0, False)
    sd = math.sqrt(var)
    if alternative == TWO_SIDED:
        z = (abs(u - mu) - 0.5) / sd
        p = min(1.0, 2 * _norm_sf(max(z, 0.0)))
    elif alternative == GREATER:
        p = _norm_sf((u - mu - 0.5) / sd)
    else:
        p = _norm_sf((mu - u - 0.5) / sd)
    return TestResult(u, min(1.0, p), False)


def _signed_rank_distribution(ranks2: Sequence[int]) -> dict[int, int]:
    """counts of 2*W+ over all 2**n sign patterns, for doubled integer ranks."""
    dist = {0: 1}
    for r in ranks2:
        nxt: dict[int, int] = {}
        for w, c in dist.items():
            nxt[w] = nxt.get(w, 0) + c
            nxt[w + r] = nxt.get(w + r, 0) + c
        dist = nxt
    return dist


def wilcoxon(
    pairs: Sequence[tuple[float, float]] | None = None,
    alternative: str = TWO_SIDED,
    *,
    differences: Sequence[float] | None = None,
) -> TestResult:
    """Wilcoxon signed-rank test on paired samples; statistic is W+.

    Differences are ``x - y``; zeros are dropped.  ``greater`` tests whether
    x tends to exceed y.
    """
    _check_alt(alternative)
    if differences is None:
        if pairs is None:
            raise ValueError("need pairs or differences")
        differences = [x - y for x, y in pairs]
    if len(differences) == 0:
        raise ValueError("empty input")
    d = [v for v in differences if v != 0]
    if not d:
        return TestResult(0.0, 1.0, True, Fraction(1))
    ranks = rankdata([abs(v) for v in d])
    w_plus = sum(r for r, v in zip(ranks, d) if v > 0)
    n = len(d)
    total = n * (n + 1) / 2

    if n <= WILCOXON_EXACT_MAX_N:
        ranks2 = [int(round(2 * r)) for r in ranks]
        dist = _signed_rank_distribution(ranks2)
        keys = sorted(dist)
        counts = [dist[k] for k in keys]
        p = _exact_p(counts, int(round(2 * w_plus)), int(round(total)), alternative, keys)
        return TestResult(w_plus, float(p), True, p)

    mu = total / 2
    var = sum(r * r for r in ranks) / 4
    sd = math.sqrt(var)
    if alternative == TWO_SIDED:
        z = (abs(w_plus - mu) - 0.5) / sd
        p = min(1.0, 2 * _norm_sf(max(z, 0.0)))
    elif alternative == GREATER:
        p = _norm_sf((w_plus - mu - 0.5) / sd)
    else:
        p = _norm_sf((mu - w_plus - 0.5) / sd)
    return TestResult(w_plus, min(1.0, p), False)
