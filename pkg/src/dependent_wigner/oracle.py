"""Exact finite-N trace moments from a cumulant specification.

``exact_trace_moment`` sums ``<M_{i1 i2} M_{i2 i3} ... M_{ik i1}>`` over every
index tuple and expands each moment over set partitions.  It deliberately
avoids any graph-counting shortcut so that it can serve as ground truth.
``wick_pairing_moment`` is a second, unrelated route for Gaussian specs.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

from .cumulants import CumulantSpec, moments_from_cumulants
from .errors import BudgetExceeded, LimitExceeded, OddOrder

__all__ = [
    "DEFAULT_BUDGET",
    "exact_trace_moment",
    "asymptotic_trend",
    "wick_pairing_moment",
    "pairings",
    "extrapolate_to_zero",
]

DEFAULT_BUDGET = 10**7


def _normalize(total, N: int, k: int):
    if total == 0:
        return Fraction(0) if isinstance(total, (int, Fraction)) else total
    if k % 2 == 0:
        return total / Fraction(N) ** (1 + k // 2)
    return total / float(N) ** (1 + k / 2)


def _pattern(tup) -> tuple[int, ...]:
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(x, len(seen)) for x in tup)


def _partial_sum(spec, N, k, first, use_cache):
    memo: dict = {}
    total = 0
    for rest in itertools.product(range(1, N + 1), repeat=k - 1):
        idx = (first,) + rest
        key = _pattern(idx) if use_cache else None
        if use_cache and key in memo:
            total = total + memo[key]
            continue
        pairs = [(idx[r], idx[(r + 1) % k]) for r in range(k)]
        val = moments_from_cumulants(pairs, spec, N)
        if use_cache:
            memo[key] = val
        total = total + val
    return total


def exact_trace_moment(
    spec: CumulantSpec,
    N: int,
    k: int,
    *,
    cache: bool = True,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
):
    """``<Tr M^k> / N^(1 + k/2)`` by brute force over all ``N^k`` index tuples.

    Moments of tuples with the same equality pattern are shared when
    ``cache`` is true; index-dependent specs always disable the cache.
    Returns a :class:`Fraction` whenever the spec is rational.
    """
    if N < 1 or k < 1:
        raise ValueError("need N >= 1 and k >= 1")
    if N**k > budget:
        raise BudgetExceeded(f"N^k = {N**k} exceeds the budget {budget}")
    use_cache = cache and spec.index_function is None
    firsts = range(1, N + 1)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_partial_sum, *zip(*[(spec, N, k, f, use_cache) for f in firsts])))
    else:
        parts = [_partial_sum(spec, N, k, f, use_cache) for f in firsts]
    total = 0
    for p in parts:
        total = total + p
    return _normalize(total, N, k)


def pairings(items: Sequence[int]):
    """All perfect matchings of ``items``."""
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    for pos in range(1, len(items)):
        rest = items[1:pos] + items[pos + 1:]
        for tail in pairings(rest):
            yield [(first, items[pos])] + tail


def wick_pairing_moment(k: int, N: int, alpha=1):
    """Gaussian ``<Tr M^k> / N^(1 + k/2)`` as a sum over Wick pairings.

    Pairing factors ``a`` and ``b`` of the cyclic product forces
    ``i_a = i_{b+1}`` and ``i_{a+1} = i_b``; each pairing contributes
    ``alpha^k N^(number of free index classes)``.
    """
    if k < 2 or k % 2:
        raise OddOrder("Gaussian moments of odd order vanish; pairings need even k")
    if k > 10:
        raise LimitExceeded("pairing enumeration is limited to k <= 10")
    count = 0
    for pairing in pairings(range(k)):
        parent = list(range(k))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            parent[find(x)] = find(y)

        for a, b in pairing:
            union(a, (b + 1) % k)
            union((a + 1) % k, b)
        classes = len({find(x) for x in range(k)})
        count += N**classes
    return _normalize(alpha**k * count, N, k)


def extrapolate_to_zero(hs: Sequence, values: Sequence):
    """Neville evaluation at ``h = 0`` of the interpolating polynomial."""
    p = list(values)
    h = list(hs)
    n = len(p)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i])
    return p[0]


def asymptotic_trend(
    spec: CumulantSpec, k: int, N_grid: Sequence[int], **kwargs
):
    """Exact moments on ``N_grid`` and their polynomial extrapolation in ``1/N``.

    Returns ``(limit_estimate, {N: value})``.
    """
    grid = sorted(int(n) for n in N_grid)
    values = {n: exact_trace_moment(spec, n, k, **kwargs) for n in grid}
    exact = all(isinstance(v, (int, Fraction)) for v in values.values())
    hs = [Fraction(1, n) if exact else 1.0 / n for n in grid]
    limit = extrapolate_to_zero(hs, [values[n] for n in grid])
    return limit, values
