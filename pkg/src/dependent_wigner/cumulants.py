"""Joint cumulants of Hermitian matrix entries.

A :class:`CumulantSpec` describes every joint cumulant of the entries of a
random Hermitian matrix as a Gaussian part, ``<M_ij M_kl>_c = alpha^2
delta_il delta_jk``, plus index-uniform perturbations ``A * N**(-theta)``
attached to cumulant graphs.  Moments follow from the set-partition sum and
cumulants from its Moebius inverse.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import EmptyGrid, InsufficientSamples, InvalidSpec, LimitExceeded
from .graphs import (
    CanonicalGraphKey,
    OrientedMultigraph,
    canonical_key,
    from_index_pattern,
    is_eulerian,
    reverse,
    scaling_exponent,
    set_partitions,
)

__all__ = [
    "PerturbationTerm",
    "CumulantSpec",
    "ConditionRecord",
    "ConditionReport",
    "as_exact",
    "n_power",
    "partition_blocks",
    "moebius_weight",
    "moments_from_cumulants",
    "cumulants_from_moments",
    "estimate_cumulant",
    "theorem_condition_report",
    "VANISH_SLOPE",
    "BOUNDED_SLOPE",
]

# Finite-N proxies for "tends to zero" and "stays bounded" on a log-log fit.
VANISH_SLOPE = -0.1
BOUNDED_SLOPE = 0.05


def as_exact(x):
    """Convert ints and floats to :class:`Fraction` (floats via their repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise InvalidSpec(f"non-finite value {x!r}")
        return Fraction(repr(float(x)))
    return x


def n_power(N: int, exponent) -> Number:
    """``N ** exponent``, exact when the exponent is an integer."""
    exponent = as_exact(exponent)
    if isinstance(exponent, Fraction) and exponent.denominator == 1:
        return Fraction(N) ** int(exponent)
    return float(N) ** float(exponent)


def _conj(x):
    return x.conjugate() if isinstance(x, complex) else x


@dataclass(frozen=True)
class PerturbationTerm:
    """Contributes ``amplitude * N**(-n_exponent)`` to every cumulant on ``graph``."""

    graph: CanonicalGraphKey
    amplitude: Number
    n_exponent: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "n_exponent", as_exact(self.n_exponent))
        amp = self.amplitude
        if isinstance(amp, (float, np.floating)) and not math.isfinite(amp):
            raise InvalidSpec("amplitude must be finite")
        if isinstance(amp, complex) and not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
            raise InvalidSpec("amplitude must be finite")

    def value(self, N: int):
        return self.amplitude * n_power(N, -self.n_exponent)

    def to_dict(self) -> dict:
        amp = self.amplitude
        if isinstance(amp, complex):
            amp = [amp.real, amp.imag]
        else:
            amp = float(amp)
        return {
            "graph": self.graph.graph().to_dict(),
            "amplitude": amp,
            "n_exponent": float(self.n_exponent),
        }


IndexFunction = Callable[[OrientedMultigraph, tuple, int], Number]


@dataclass(frozen=True)
class CumulantSpec:
    """All joint cumulants of the entries of an ``N x N`` Hermitian matrix.

    ``perturbations`` is completed on construction so that every graph ``G``
    is accompanied by its edge-reversed graph with the conjugate amplitude.
    ``index_function`` is an optional hook ``(graph, vertex_indices, N) ->
    value`` for index-dependent cumulants; it is only consulted by the exact
    moment routines.
    """

    gaussian_alpha: Number = 1
    perturbations: tuple[PerturbationTerm, ...] = ()
    index_function: IndexFunction | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.gaussian_alpha < 0:
            raise InvalidSpec("gaussian_alpha must be non-negative")
        terms = list(self.perturbations)
        present = {(t.graph, t.n_exponent) for t in terms}
        for t in list(terms):
            g = t.graph.graph()
            rkey = canonical_key(reverse(g))
            if rkey == t.graph:
                if isinstance(t.amplitude, complex) and t.amplitude.imag != 0:
                    raise InvalidSpec(
                        "a graph isomorphic to its reverse needs a real amplitude"
                    )
            elif (rkey, t.n_exponent) not in present:
                terms.append(PerturbationTerm(rkey, _conj(t.amplitude), t.n_exponent))
                present.add((rkey, t.n_exponent))
        object.__setattr__(self, "perturbations", tuple(terms))
        table: dict[CanonicalGraphKey, list[PerturbationTerm]] = {}
        for t in terms:
            table.setdefault(t.graph, []).append(t)
        object.__setattr__(self, "_table", table)

    @property
    def alpha2(self):
        a = self.gaussian_alpha
        return a * a

    def perturbation_graphs(self) -> list[CanonicalGraphKey]:
        return sorted(self._table)

    def perturbation_value(self, key: CanonicalGraphKey, N: int):
        """Index-uniform perturbation ``C''_G`` at size ``N``."""
        return sum((t.value(N) for t in self._table.get(key, ())), 0)

    def gaussian_value(self, g: OrientedMultigraph):
        # <M_ij M_ji>_c = alpha^2 : the 2-cycle and, for i == j, the double loop
        if g.edge_count != 2:
            return 0
        (s1, t1), (s2, t2) = g.edges
        return self.alpha2 if (s1 == t2 and t1 == s2) else 0

    def block_cumulant(self, pairs: Sequence[tuple[int, int]], N: int):
        """Joint cumulant of the entries ``M_{ij}`` for ``(i, j)`` in ``pairs``."""
        g, labels = from_index_pattern(pairs)
        value = self.gaussian_value(g) + self.perturbation_value(canonical_key(g), N)
        if self.index_function is not None:
            inv = sorted(labels, key=labels.get)
            value = value + self.index_function(g, tuple(inv), N)
        return value

    def to_dict(self) -> dict:
        return {
            "alpha": float(self.gaussian_alpha),
            "perturbations": [t.to_dict() for t in self.perturbations],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CumulantSpec":
        terms = []
        for item in data.get("perturbations", []):
            g = OrientedMultigraph.from_dict(item["graph"])
            amp = item["amplitude"]
            if isinstance(amp, (list, tuple)):
                amp = complex(amp[0], amp[1])
            else:
                amp = as_exact(amp)
            terms.append(
                PerturbationTerm(canonical_key(g), amp, as_exact(item.get("n_exponent", 0)))
            )
        return cls(as_exact(data.get("alpha", 1)), tuple(terms))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CumulantSpec":
        return cls.from_dict(json.loads(text))


@lru_cache(maxsize=None)
def _partitions(n: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    out = []
    for rgs in set_partitions(n):
        blocks = [[] for _ in range(max(rgs) + 1)] if n else []
        for pos, b in enumerate(rgs):
            blocks[b].append(pos)
        out.append(tuple(tuple(b) for b in blocks))
    return tuple(out)


def partition_blocks(n: int):
    """All set partitions of ``range(n)`` as tuples of blocks."""
    return _partitions(n)


def moebius_weight(block_count: int) -> int:
    """Moebius function of the partition lattice from a partition to the top."""
    return (-1) ** (block_count - 1) * math.factorial(block_count - 1)


def moments_from_cumulants(
    entry_indices: Sequence[tuple[int, int]], spec: CumulantSpec, N: int
):
    """``<prod M_{ij}>`` as the sum over set partitions of cumulant products."""
    pairs = [tuple(p) for p in entry_indices]
    for i, j in pairs:
        if not (1 <= i <= N and 1 <= j <= N):
            raise InvalidSpec(f"index pair {(i, j)} outside 1..{N}")
    cache: dict = {}
    total = 0
    for blocks in _partitions(len(pairs)):
        term = 1
        for b in blocks:
            sub = tuple(pairs[p] for p in b)
            if sub not in cache:
                cache[sub] = spec.block_cumulant(sub, N)
            term = term * cache[sub]
            if term == 0:
                break
        total = total + term
    return total


def cumulants_from_moments(
    moment_function: Callable[[tuple], Number], entry_indices: Sequence
):
    """Joint cumulant from moments of every sub-multiset of the factors."""
    factors = tuple(tuple(p) if isinstance(p, (list, tuple)) else p for p in entry_indices)
    cache: dict = {}
    total = 0
    for blocks in _partitions(len(factors)):
        term = moebius_weight(len(blocks))
        for b in blocks:
            if b not in cache:
                cache[b] = moment_function(tuple(factors[p] for p in b))
            term = term * cache[b]
        total = total + term
    return total


def _plugin_cumulant(values: np.ndarray):
    # values: (samples, order) entry draws
    order = values.shape[1]
    means: dict = {}
    total = 0j
    for blocks in _partitions(order):
        term = complex(moebius_weight(len(blocks)))
        for b in blocks:
            if b not in means:
                means[b] = np.prod(values[:, list(b)], axis=1).mean()
            term *= means[b]
        total += term
    return total


def estimate_cumulant(samples, entry_indices, batches: int = 10):
    """Plug-in joint cumulant of matrix entries with a batch-means error.

    ``entry_indices`` are 1-based ``(i, j)`` pairs.  Returns ``(estimate,
    standard_error)``; the estimate uses every sample, the error is the spread
    of the same estimator over ``batches`` disjoint batches.
    """
    samples = np.asarray(samples)
    if samples.ndim != 3 or samples.shape[0] < 2:
        raise InsufficientSamples("need at least two sample matrices")
    pairs = [tuple(p) for p in entry_indices]
    if not 1 <= len(pairs) <= 4:
        raise LimitExceeded("empirical cumulants are supported up to order 4")
    rows = np.array([i - 1 for i, _ in pairs])
    cols = np.array([j - 1 for _, j in pairs])
    values = samples[:, rows, cols].astype(complex)
    estimate = _plugin_cumulant(values)
    nb = min(batches, samples.shape[0])
    if nb < 2:
        raise InsufficientSamples("need at least two batches")
    parts = np.array_split(values, nb)
    batch_est = np.array([_plugin_cumulant(p) for p in parts])
    spread = np.sum(np.abs(batch_est - batch_est.mean()) ** 2) / (nb - 1)
    return estimate, float(np.sqrt(spread / nb))


@dataclass
class ConditionRecord:
    graph: OrientedMultigraph
    classification: str
    scaling_exponent: Fraction
    N_grid: list[int]
    scaled_values: list[float]
    slope: float
    verdict: str
    bullet: str
    passed: bool

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "classification": self.classification,
            "scaling_exponent": str(self.scaling_exponent),
            "N_grid": list(self.N_grid),
            "scaled_values": list(self.scaled_values),
            "slope": self.slope,
            "verdict": self.verdict,
            "bullet": self.bullet,
            "passed": self.passed,
        }


@dataclass
class ConditionReport:
    records: list[ConditionRecord]
    quantity: str = "N^(v-c-e/2) |C''_G(N)|, perturbation part only"
    thresholds: str = (
        f"log-log slope < {VANISH_SLOPE}: vanishes; "
        f"<= {BOUNDED_SLOPE}: bounded; otherwise violates (finite-N proxies)"
    )

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> list[ConditionRecord]:
        return [r for r in self.records if not r.passed]

    def record_for(self, g: OrientedMultigraph) -> ConditionRecord:
        key = canonical_key(g)
        for r in self.records:
            if canonical_key(r.graph) == key:
                return r
        raise KeyError(g)

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "thresholds": self.thresholds,
            "all_passed": self.all_passed,
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


_BULLETS = {
    "eulerian": "Eulerian: N^(v-c-e/2) C''_G -> 0",
    "non_eulerian": "non-Eulerian: N^(v-c-e/2) C''_G bounded",
}


def theorem_condition_report(
    spec: CumulantSpec, graphs: Iterable[OrientedMultigraph], N_grid: Sequence[int]
) -> ConditionReport:
    """Check the scaling hypotheses graph by graph on a grid of sizes."""
    grid = [int(n) for n in N_grid]
    if not grid:
        raise EmptyGrid("N_grid is empty")
    if len(grid) < 3 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidSpec("N_grid must be increasing with at least three sizes")
    logn = np.log(grid)
    records = []
    for g in graphs:
        key = canonical_key(g)
        expo = scaling_exponent(g)
        vals = [
            float(n_power(n, expo)) * abs(complex(spec.perturbation_value(key, n)))
            for n in grid
        ]
        positive = [(x, v) for x, v in zip(logn, vals) if v > 0]
        if len(positive) < 2:
            slope = -math.inf
        else:
            xs, ys = zip(*positive)
            slope = float(np.polyfit(xs, np.log(ys), 1)[0])
        if slope < VANISH_SLOPE:
            verdict = "vanishes"
        elif slope <= BOUNDED_SLOPE:
            verdict = "bounded"
        else:
            verdict = "violates"
        cls = "eulerian" if is_eulerian(g) else "non_eulerian"
        passed = verdict == "vanishes" or (cls == "non_eulerian" and verdict == "bounded")
        records.append(
            ConditionRecord(g, cls, expo, grid, vals, slope, verdict, _BULLETS[cls], passed)
        )
    return ConditionReport(records)
