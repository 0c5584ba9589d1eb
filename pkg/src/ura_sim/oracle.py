"""Exhaustive enumerators for small instances.

These count configurations directly from explicit pattern lists, with
integer arithmetic and one final division, and share no code with the
closed forms in ``analytics`` that they are used to check.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import comb, prod

from .access_codes import SteinerCode, build_steiner_code
from .errors import InstanceTooLarge, InvalidParameters

GUARD = 10**7


def _mask_counts(patterns, target):
    """How many patterns meet ``target`` in each subset of its positions (as a bitmask)."""
    pos = {s: i for i, s in enumerate(target)}
    counts = Counter()
    for p in patterns:
        m = 0
        for s in p:
            if s in pos:
                m |= 1 << pos[s]
        counts[m] += 1
    return counts


def enumerate_dsa_diversity(M: int, K: int, N: int) -> list[Fraction]:
    """Exact P(K' = k | N), k = 0..K, over all C(M,K)^(N-1) interferer tuples.

    Tuples are walked grouped by how each interferer meets the tagged pattern
    {0..K-1}; each group is weighted by its number of member tuples.
    """
    if N < 1 or K < 1 or M < K:
        raise InvalidParameters("need N >= 1 and 1 <= K <= M")
    if comb(M, K) ** (N - 1) > GUARD:
        raise InstanceTooLarge(f"C({M},{K})^{N - 1} tuples exceed guard {GUARD}")
    target = tuple(range(K))
    classes = sorted(_mask_counts(itertools.combinations(range(M), K), target).items())
    counts = [0] * (K + 1)
    for combo in itertools.product(classes, repeat=N - 1):
        union = 0
        for m, _ in combo:
            union |= m
        counts[K - bin(union).count("1")] += prod(c for _, c in combo)
    total = comb(M, K) ** (N - 1)
    assert sum(counts) == total
    return [Fraction(c, total) for c in counts]


def enumerate_dsa_diversity_naive(M: int, K: int, N: int) -> list[Fraction]:
    """Same as ``enumerate_dsa_diversity`` but one tuple at a time."""
    if comb(M, K) ** (N - 1) > GUARD:
        raise InstanceTooLarge("instance too large")
    pats = [set(p) for p in itertools.combinations(range(M), K)]
    target = set(range(K))
    counts = [0] * (K + 1)
    for tup in itertools.product(pats, repeat=N - 1):
        hit = set().union(*tup) & target if tup else set()
        counts[K - len(hit)] += 1
    total = sum(counts)
    return [Fraction(c, total) for c in counts]


def _check_code_n(code: SteinerCode, N: int):
    if not 1 <= N <= code.C:
        raise InvalidParameters(f"need 1 <= N <= C={code.C}")
    if comb(code.C - 1, N - 1) > GUARD:
        raise InstanceTooLarge(f"C({code.C - 1},{N - 1}) subsets exceed guard {GUARD}")


def enumerate_steiner_diversity(code: SteinerCode, N: int) -> list[Fraction]:
    """Exact P(K' = k | N) averaged over the tagged pattern and all
    (N-1)-subsets of the remaining patterns."""
    _check_code_n(code, N)
    K = code.K
    counts = [0] * (K + 1)
    for u, mine in enumerate(code.patterns):
        others = [set(p) & set(mine) for i, p in enumerate(code.patterns) if i != u]
        for active in itertools.combinations(others, N - 1):
            hit = set().union(*active)
            counts[K - len(hit)] += 1
    total = code.C * comb(code.C - 1, N - 1)
    return [Fraction(c, total) for c in counts]


def enumerate_dsa_interferers(M: int, K: int, N: int) -> list[Fraction]:
    """Exact P(L' = l | N), l = 0..N-1, for subchannel 0 of the tagged user."""
    if N < 1 or K < 1 or M < K:
        raise InvalidParameters("need N >= 1 and 1 <= K <= M")
    if comb(M, K) ** (N - 1) > GUARD:
        raise InstanceTooLarge(f"C({M},{K})^{N - 1} tuples exceed guard {GUARD}")
    holds = sum(1 for p in itertools.combinations(range(M), K) if 0 in p)
    lacks = comb(M, K) - holds
    counts = [0] * N
    for combo in itertools.product((True, False), repeat=N - 1):
        l = sum(combo)
        counts[l] += holds**l * lacks ** (N - 1 - l)
    total = comb(M, K) ** (N - 1)
    assert sum(counts) == total
    return [Fraction(c, total) for c in counts]


def enumerate_steiner_interferers(code: SteinerCode, N: int) -> list[Fraction]:
    """Exact P(L' = l | N), l = 0..N-1, averaged over tagged pattern and subchannel."""
    _check_code_n(code, N)
    counts = [0] * N
    for u, mine in enumerate(code.patterns):
        others = [p for i, p in enumerate(code.patterns) if i != u]
        for active in itertools.combinations(others, N - 1):
            for s in mine:
                counts[sum(1 for p in active if s in p)] += 1
    total = code.C * comb(code.C - 1, N - 1) * code.K
    return [Fraction(c, total) for c in counts]


def enumerate_interferers(scheme: str, N: int, *, M=None, K=None, code=None) -> list[Fraction]:
    if scheme == "dsa":
        return enumerate_dsa_interferers(M, K, N)
    if scheme == "steiner":
        return enumerate_steiner_interferers(code, N)
    raise InvalidParameters(f"unknown scheme {scheme!r}")


def enumerate_pair_coverage(code: SteinerCode) -> dict[tuple[int, int], int]:
    """Number of patterns containing each unordered pair of subchannels."""
    cover = {pair: 0 for pair in itertools.combinations(range(code.M), 2)}
    for p in code.patterns:
        for pair in itertools.combinations(p.subchannels, 2):
            cover[pair] += 1
    return cover


# -- bulk comparison against analytics ------------------------------------------------


@dataclass
class OracleMismatch:
    label: str
    max_abs_error: float


def cross_check(tol: float = 1e-12):
    """Compare every closed-form conditional with enumeration on the standard
    instance set.  Returns (instances_checked, worst_error, mismatches)."""
    from . import analytics as an

    checked = 0
    worst = 0.0
    bad: list[OracleMismatch] = []

    def record(label, exact, closed):
        nonlocal checked, worst
        err = max(abs(float(e) - c) for e, c in zip(exact, closed))
        checked += 1
        worst = max(worst, err)
        if err > tol:
            bad.append(OracleMismatch(label, err))

    for M in range(1, 9):
        for K in range(1, min(3, M) + 1):
            for N in range(1, 6):
                div = enumerate_dsa_diversity(M, K, N)
                record(f"dsa diversity M={M} K={K} N={N}", div,
                       [an.p_dsa_diversity_given_n(M, K, k, N) for k in range(K + 1)])
                inter = enumerate_dsa_interferers(M, K, N)
                record(f"dsa interferers M={M} K={K} N={N}", inter,
                       [an.p_dsa_interferers_given_n(M, K, l, N) for l in range(N)])

    for (M, K), n_max in (((7, 3), 7), ((9, 3), 5)):
        code = build_steiner_code(M, K)
        params = an.ScenarioParams.steiner(M, K)
        for N in range(1, n_max + 1):
            record(f"steiner diversity ({M},{K}) N={N}", enumerate_steiner_diversity(code, N),
                   [an.p_det_diversity_given_n(params, k, N) for k in range(K + 1)])
            record(f"steiner interferers ({M},{K}) N={N}", enumerate_steiner_interferers(code, N),
                   [an.p_det_interferers_given_n(params, l, N) for l in range(N)])
    return checked, worst, bad
