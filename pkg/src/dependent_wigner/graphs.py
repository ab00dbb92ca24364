"""Oriented multigraphs labelling joint cumulants of matrix entries.

A cumulant ``<M_{i1 j1} ... M_{ik jk}>_c`` is labelled by the graph with one
vertex per distinct index and one edge ``i -> j`` per factor ``M_ij``.  Loops
and parallel edges are allowed; vertices without edges are not.

Canonical forms are computed by brute force over vertex permutations, which is
fine for the handful of vertices that appear in cumulants of low order.
"""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import factorial
from typing import Iterable, Iterator, Sequence

from .errors import InvalidSpec, LimitExceeded, NotConnected

__all__ = [
    "OrientedMultigraph",
    "CanonicalGraphKey",
    "DEFAULT_VERTEX_LIMIT",
    "from_index_pattern",
    "is_eulerian",
    "connected_components",
    "scaling_exponent",
    "automorphism_count",
    "symmetry_factor",
    "canonical_key",
    "graph_from_key",
    "enumerate_graphs",
    "check_euler_lemma",
    "reverse",
    "set_partitions",
]

DEFAULT_VERTEX_LIMIT = 8

Edge = tuple[int, int]


@dataclass(frozen=True)
class OrientedMultigraph:
    """Directed multigraph on vertices ``0 .. vertex_count - 1``.

    Every vertex must carry at least one edge end.  The order of ``edges`` is
    irrelevant for every invariant computed here.
    """

    vertex_count: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        edges = tuple((int(s), int(t)) for s, t in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.vertex_count < 1:
            raise InvalidSpec("a graph needs at least one vertex")
        used = set()
        for s, t in edges:
            if not (0 <= s < self.vertex_count and 0 <= t < self.vertex_count):
                raise InvalidSpec(f"edge {(s, t)} leaves the vertex range")
            used.update((s, t))
        if len(used) != self.vertex_count:
            raise InvalidSpec("every vertex must be incident to an edge")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def out_degrees(self) -> tuple[int, ...]:
        deg = [0] * self.vertex_count
        for s, _ in self.edges:
            deg[s] += 1
        return tuple(deg)

    @cached_property
    def in_degrees(self) -> tuple[int, ...]:
        deg = [0] * self.vertex_count
        for _, t in self.edges:
            deg[t] += 1
        return tuple(deg)

    def relabel(self, perm: Sequence[int]) -> "OrientedMultigraph":
        """Return the graph with vertex ``v`` renamed ``perm[v]``."""
        return OrientedMultigraph(
            self.vertex_count, tuple((perm[s], perm[t]) for s, t in self.edges)
        )

    def to_dict(self) -> dict:
        return {"v": self.vertex_count, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "OrientedMultigraph":
        return cls(int(data["v"]), tuple(tuple(e) for e in data["edges"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True, order=True)
class CanonicalGraphKey:
    """Isomorphism-invariant encoding of an :class:`OrientedMultigraph`."""

    canonical_encoding: bytes

    @property
    def vertex_count(self) -> int:
        return self.canonical_encoding[0]

    @property
    def edge_count(self) -> int:
        return self.canonical_encoding[1]

    def graph(self) -> OrientedMultigraph:
        return graph_from_key(self)

    def __repr__(self):
        g = self.graph()
        return f"CanonicalGraphKey(v={g.vertex_count}, edges={list(g.edges)})"


def from_index_pattern(
    index_pairs: Iterable[tuple[int, int]],
) -> tuple[OrientedMultigraph, dict[int, int]]:
    """Build the cumulant graph of ``prod M_{ij}`` over ``index_pairs``.

    Equal raw indices share a vertex; vertex ids follow first appearance.

    >>> g, labels = from_index_pattern([(1, 2), (2, 1)])
    >>> g.edges, labels
    (((0, 1), (1, 0)), {1: 0, 2: 1})
    """
    labels: dict[int, int] = {}
    edges = []
    for i, j in index_pairs:
        for x in (i, j):
            if x not in labels:
                labels[x] = len(labels)
        edges.append((labels[i], labels[j]))
    if not edges:
        raise InvalidSpec("index pattern must be non-empty")
    return OrientedMultigraph(len(labels), tuple(edges)), labels


def is_eulerian(g: OrientedMultigraph) -> bool:
    """Degree balance at every vertex; connectivity is not required."""
    return g.out_degrees == g.in_degrees


def _components(vertex_count: int, edges: Iterable[Edge]) -> list[int]:
    parent = list(range(vertex_count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s, t in edges:
        rs, rt = find(s), find(t)
        if rs != rt:
            parent[rs] = rt
    return [find(v) for v in range(vertex_count)]


def connected_components(g: OrientedMultigraph) -> int:
    """Number of weakly connected components."""
    return len(set(_components(g.vertex_count, g.edges)))


def scaling_exponent(g: OrientedMultigraph) -> Fraction:
    """``v(G) - c(G) - e(G)/2`` as an exact rational."""
    return Fraction(g.vertex_count - connected_components(g)) - Fraction(g.edge_count, 2)


def _check_limit(g: OrientedMultigraph, limit: int | None):
    limit = DEFAULT_VERTEX_LIMIT if limit is None else limit
    if g.vertex_count > limit:
        raise LimitExceeded(
            f"graph has {g.vertex_count} vertices, brute-force limit is {limit}"
        )


def _vertex_classes(vertex_count: int, edges: tuple[Edge, ...]):
    # (out, in, loops) is invariant under relabelling, so any minimising
    # permutation lists vertices in ascending order of it.
    out = [0] * vertex_count
    inn = [0] * vertex_count
    loops = [0] * vertex_count
    for s, t in edges:
        out[s] += 1
        inn[t] += 1
        if s == t:
            loops[s] += 1
    inv = [(out[v], inn[v], loops[v]) for v in range(vertex_count)]
    order = sorted(range(vertex_count), key=lambda v: inv[v])
    classes = [list(grp) for _, grp in itertools.groupby(order, key=lambda v: inv[v])]
    return inv, classes


def _class_permutations(classes) -> Iterator[list[int]]:
    """Permutations ``perm[old] = new`` respecting the invariant ordering."""
    n = sum(len(c) for c in classes)
    offsets = []
    pos = 0
    for c in classes:
        offsets.append(pos)
        pos += len(c)
    for choice in itertools.product(*(itertools.permutations(c) for c in classes)):
        perm = [0] * n
        for off, arrangement in zip(offsets, choice):
            for k, v in enumerate(arrangement):
                perm[v] = off + k
        yield perm


@lru_cache(maxsize=200_000)
def _canonical_encoding(vertex_count: int, edges: tuple[Edge, ...]) -> bytes:
    inv, classes = _vertex_classes(vertex_count, edges)
    best = None
    for perm in _class_permutations(classes):
        enc = tuple(sorted((perm[s], perm[t]) for s, t in edges))
        if best is None or enc < best:
            best = enc
    head = [vertex_count, len(edges)]
    for x in sorted(inv):
        head.extend(x)
    return bytes(head + [x for e in best for x in e])


def canonical_key(g: OrientedMultigraph, limit: int | None = None) -> CanonicalGraphKey:
    """Lexicographically minimal encoding over all vertex relabellings.

    The encoding starts with the sorted (out, in, loop) degree triples, so the
    minimum is attained by permutations that order vertices by those triples;
    only those are searched.
    """
    _check_limit(g, limit)
    return CanonicalGraphKey(_canonical_encoding(g.vertex_count, tuple(sorted(g.edges))))


def graph_from_key(key: CanonicalGraphKey) -> OrientedMultigraph:
    data = key.canonical_encoding
    v, e = data[0], data[1]
    body = data[2 + 3 * v:]
    edges = tuple((body[2 * k], body[2 * k + 1]) for k in range(e))
    return OrientedMultigraph(v, edges)


def automorphism_count(g: OrientedMultigraph, limit: int | None = None) -> int:
    """Number of vertex permutations that preserve the edge multiset."""
    _check_limit(g, limit)
    target = sorted(g.edges)
    _, classes = _vertex_classes(g.vertex_count, g.edges)
    # map every vertex class onto itself
    count = 0
    for choice in itertools.product(*(itertools.permutations(c) for c in classes)):
        perm = list(range(g.vertex_count))
        for cls, arrangement in zip(classes, choice):
            for src, dst in zip(cls, arrangement):
                perm[src] = dst
        if sorted((perm[s], perm[t]) for s, t in g.edges) == target:
            count += 1
    return count


def symmetry_factor(g: OrientedMultigraph, limit: int | None = None) -> int:
    """Order of the automorphism group acting on vertices *and* edges.

    Parallel edges can be swapped independently, so this is
    ``automorphism_count(g) * prod(multiplicity!)``.  It is the denominator
    that makes the graph expansion of a generating function agree with its
    Taylor series.
    """
    mult = 1
    for m in Counter(g.edges).values():
        mult *= factorial(m)
    return automorphism_count(g, limit) * mult


def reverse(g: OrientedMultigraph) -> OrientedMultigraph:
    """Flip every edge (the graph of the conjugate-transposed cumulant)."""
    return OrientedMultigraph(g.vertex_count, tuple((t, s) for s, t in g.edges))


def set_partitions(n: int, max_blocks: int | None = None) -> Iterator[tuple[int, ...]]:
    """Restricted-growth strings of length ``n``: ``a[0] = 0``, ``a[k] <= 1 + max(a[:k])``."""
    if n == 0:
        yield ()
        return
    cap = n if max_blocks is None else max_blocks
    a = [0] * n

    def rec(k, top):
        if k == n:
            yield tuple(a)
            return
        for b in range(min(top + 2, cap)):
            a[k] = b
            yield from rec(k + 1, max(top, b))

    yield from rec(1, 0)


def enumerate_graphs(
    max_vertices: int = 4, max_edges: int = 4, limit: int | None = None
) -> list[OrientedMultigraph]:
    """One representative per isomorphism class, 1 <= edges <= ``max_edges``.

    Graphs are generated by assigning the ``2e`` edge ends to vertices (a set
    partition of the ends), then deduplicated by canonical key.  Output is
    sorted by (edges, vertices, key).
    """
    cap = DEFAULT_VERTEX_LIMIT if limit is None else limit
    if max_vertices > cap or max_edges > cap:
        raise LimitExceeded(f"enumeration limited to {cap} vertices and edges")
    seen: dict[CanonicalGraphKey, OrientedMultigraph] = {}
    for e in range(1, max_edges + 1):
        for rgs in set_partitions(2 * e, max_vertices):
            edges = tuple((rgs[2 * k], rgs[2 * k + 1]) for k in range(e))
            g = OrientedMultigraph(max(rgs) + 1, edges)
            key = canonical_key(g, limit=cap)
            if key not in seen:
                seen[key] = graph_from_key(key)
    return [seen[k] for k in sorted(seen, key=lambda k: (k.edge_count, k.vertex_count, k))]


def check_euler_lemma(g: OrientedMultigraph) -> bool:
    """A connected graph is Eulerian or has at least two unbalanced vertices."""
    if connected_components(g) != 1:
        raise NotConnected("expected a connected graph")
    unbalanced = sum(o != i for o, i in zip(g.out_degrees, g.in_degrees))
    return is_eulerian(g) != (unbalanced >= 2)
