"""Truncated iteration of the replica effective-potential flow.

The effective potential is expanded on oriented graphs,

    V(t) = sum_G c_G(t) S_G,    S_G = sum_{distinct i} prod_{s->t} (X X^dagger)_{i_s i_t},

and the flow ``dV/dt = L V + Q(V, V)`` with

* ``L = sum_{i,a} d^2 / dX_{ia} dXbar_{ia}`` -- on a single graph, joins an
  outgoing and an incoming half edge at the same vertex;
* ``Q = sum_{i,a} dV/dX_{ia} dV/dXbar_{ia}`` -- joins two graphs at a vertex,
  followed by every identification of their remaining vertices

is solved order by order in ``t``:
``V_k = (L V_{k-1} + sum_j Q(V_j, V_{k-1-j})) / k``.

Each coefficient is an exact Laurent polynomial in ``N`` (rational
exponents, so ``N**(-beta)`` perturbations fit), and the replica count
``n`` is kept to first order.  With the Gaussian input the loop coefficient
reproduces the finite-N trace moments exactly; its ``N^0`` part is the large
N Green function series.

Terms that contain at least one perturbation insertion also carry a
:class:`ScalingRecord`: a worst-case bound ``|N^(v-c-e/2) C''_G| <= C N^eps``
propagated from the parents' records and the change of ``v - c`` under each
surgery, ignoring any cancellation.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .cumulants import CumulantSpec, as_exact
from .errors import InsufficientOrder, PropagationViolation, TruncationTooSmall
from .graphs import (
    CanonicalGraphKey,
    OrientedMultigraph,
    _canonical_encoding,
    canonical_key,
    connected_components,
    graph_from_key,
    is_eulerian,
    reverse,
    symmetry_factor,
)

__all__ = [
    "NPoly",
    "ScalingRecord",
    "FlowTerm",
    "Truncation",
    "FlowState",
    "VACUUM",
    "LOOP",
    "initialize",
    "flow_step",
    "run_flow",
    "green_series",
    "verify_bound_propagation",
    "laplacian_children",
    "quadratic_children",
    "labelings_agree",
    "PropagationReport",
]

log = logging.getLogger(__name__)

VACUUM = CanonicalGraphKey(b"\x00\x00")
LOOP = canonical_key(OrientedMultigraph(1, ((0, 0),)))


class NPoly:
    """Finite sum ``sum_x a_x N^x`` with rational exponents ``x``."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {} if terms is None else {x: a for x, a in terms.items() if a != 0}

    @classmethod
    def const(cls, a) -> "NPoly":
        return cls({Fraction(0): a})

    @classmethod
    def monomial(cls, a, x) -> "NPoly":
        return cls({as_exact(x): a})

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other: "NPoly") -> "NPoly":
        out = dict(self.terms)
        for x, a in other.terms.items():
            out[x] = out.get(x, 0) + a
        return NPoly(out)

    def __mul__(self, other):
        if not isinstance(other, NPoly):
            return NPoly({x: a * other for x, a in self.terms.items()})
        out: dict = {}
        for x, a in self.terms.items():
            for y, b in other.terms.items():
                out[x + y] = out.get(x + y, 0) + a * b
        return NPoly(out)

    __rmul__ = __mul__

    def shift(self, x) -> "NPoly":
        """Multiply by ``N**x``."""
        return NPoly({y + x: a for y, a in self.terms.items()})

    def coefficient(self, x):
        return self.terms.get(as_exact(x), 0)

    def leading(self):
        """``(exponent, coefficient)`` of the highest power, or ``(-inf, 0)``."""
        if not self.terms:
            return -math.inf, 0
        x = max(self.terms)
        return x, self.terms[x]

    def abs_sum(self) -> float:
        return float(sum(abs(a) for a in self.terms.values()))

    def __call__(self, N):
        total = 0
        for x, a in self.terms.items():
            if x.denominator == 1:
                total = total + a * Fraction(N) ** int(x)
            else:
                total = total + a * float(N) ** float(x)
        return total

    def __eq__(self, other):
        return isinstance(other, NPoly) and self.terms == other.terms

    def __repr__(self):
        parts = [f"{a}*N^{x}" for x, a in sorted(self.terms.items(), reverse=True)]
        return "NPoly(" + " + ".join(parts or ["0"]) + ")"

    def to_json(self):
        def enc(a):
            if isinstance(a, complex):
                return [a.real, a.imag]
            return str(a) if isinstance(a, Fraction) else a

        return {str(x): enc(a) for x, a in sorted(self.terms.items())}


_ONE = NPoly.const(Fraction(1))


@dataclass(frozen=True)
class ScalingRecord:
    """``|N^(v-c-e/2) C_G| <= bound_constant * N^n_exponent`` for all ``N >= 1``."""

    bound_constant: float
    n_exponent: float
    vanishing: bool

    @classmethod
    def combine(cls, parts: Iterable[tuple[float, float]]) -> "ScalingRecord":
        parts = [(c, x) for c, x in parts if c > 0 and x > -math.inf]
        if not parts:
            return cls(0.0, -math.inf, True)
        x = max(p[1] for p in parts)
        c = sum(p[0] for p in parts)
        return cls(c, x, x < 0)

    def to_dict(self) -> dict:
        return {
            "bound_constant": self.bound_constant,
            "n_exponent": self.n_exponent,
            "vanishing": self.vanishing,
        }


@dataclass
class FlowTerm:
    graph: CanonicalGraphKey
    t_power: int
    n_degree: int
    sector: str
    coefficient: NPoly
    record: ScalingRecord | None = None

    def to_dict(self) -> dict:
        out = {
            "graph": None if self.graph == VACUUM else graph_from_key(self.graph).to_dict(),
            "t_power": self.t_power,
            "n_degree": self.n_degree,
            "sector": self.sector,
            "coefficient": self.coefficient.to_json(),
        }
        if self.record is not None:
            out["scaling_record"] = self.record.to_dict()
        return out


@dataclass(frozen=True)
class Truncation:
    max_t: int = 4
    max_vertices: int = 4
    max_edges: int = 4
    prune_unreachable: bool = False

    @classmethod
    def for_green_series(cls, max_power: int) -> "Truncation":
        """Limits that keep every term able to reach ``1/z^max_power``."""
        max_t = max(max_power - 2, 0)
        edges = (max_t + 3) // 2 + 1
        return cls(max_t, 2 * edges, edges, prune_unreachable=True)


@dataclass
class FlowState:
    terms: dict
    truncation: Truncation
    order: int = 0
    alpha2: object = 0
    quadratic_events: Counter = field(default_factory=Counter)
    dropped: int = 0

    def at(self, t_power: int, n_degree: int | None = None, sector: str | None = None):
        return [
            term
            for (g, t, n, s), term in self.terms.items()
            if t == t_power and (n_degree is None or n == n_degree) and (sector is None or s == sector)
        ]

    def coefficient(self, graph: CanonicalGraphKey, t_power: int, n_degree: int = 0,
                    sector: str | None = None) -> NPoly:
        total = NPoly()
        for s in (("gaussian", "perturbation") if sector is None else (sector,)):
            term = self.terms.get((graph, t_power, n_degree, s))
            if term is not None:
                total = total + term.coefficient
        return total

    def dump(self) -> list[dict]:
        keys = sorted(self.terms, key=lambda k: (k[1], k[2], k[3], k[0]))
        return [self.terms[k].to_dict() for k in keys]

    def to_json(self) -> str:
        return json.dumps(self.dump(), indent=1)


@lru_cache(maxsize=None)
def _stats(key: CanonicalGraphKey):
    """``(v - c, symmetry factor, eulerian)`` of a key."""
    if key == VACUUM:
        return 0, 1, True
    g = graph_from_key(key)
    return (
        g.vertex_count - connected_components(g),
        symmetry_factor(g),
        is_eulerian(g),
    )


def _encode(edges) -> CanonicalGraphKey:
    if not edges:
        return VACUUM
    ids: dict[int, int] = {}
    for s, t in edges:
        ids.setdefault(s, len(ids))
        ids.setdefault(t, len(ids))
    relabelled = tuple(sorted((ids[s], ids[t]) for s, t in edges))
    return CanonicalGraphKey(_canonical_encoding(len(ids), relabelled))


def _free_vertex_factor(rest: int) -> NPoly:
    # sum over an index distinct from `rest` others: N - rest
    return NPoly({Fraction(1): Fraction(1), Fraction(0): Fraction(-rest)})


@lru_cache(maxsize=None)
def laplacian_children(key: CanonicalGraphKey) -> tuple:
    """``L S_G`` as ``((child, n_increment, factor), ...)``.

    For each vertex ``w`` and each pair (outgoing edge ``w -> t1``, incoming
    edge ``s2 -> w``) the two edges are fused into ``s2 -> t1``.  Fusing a
    loop with itself leaves a free replica index (factor ``n``).  A vertex
    left without edges is summed over freely.
    """
    if key == VACUUM:
        return ()
    return _laplacian_labeled(graph_from_key(key))


def _laplacian_labeled(g: OrientedMultigraph) -> tuple:
    edges = list(g.edges)
    v = g.vertex_count
    acc: dict = defaultdict(NPoly)
    for w in range(v):
        outs = [a for a, (s, _) in enumerate(edges) if s == w]
        ins = [b for b, (_, t) in enumerate(edges) if t == w]
        for a in outs:
            for b in ins:
                if a == b:
                    rem = [e for k, e in enumerate(edges) if k != a]
                    n_inc = 1
                else:
                    rem = [e for k, e in enumerate(edges) if k not in (a, b)]
                    rem.append((edges[b][0], edges[a][1]))
                    n_inc = 0
                isolated = all(w not in e for e in rem)
                factor = _free_vertex_factor(v - 1) if isolated else _ONE
                child = _encode(rem)
                acc[(child, n_inc)] = acc[(child, n_inc)] + factor
    return tuple((c, n, f) for (c, n), f in acc.items() if f)


def _partial_matchings(left, right, min_size=0):
    for r in range(min_size, min(len(left), len(right)) + 1):
        for chosen in itertools.combinations(left, r):
            for image in itertools.permutations(right, r):
                yield dict(zip(image, chosen))


@lru_cache(maxsize=None)
def quadratic_children(key_a: CanonicalGraphKey, key_b: CanonicalGraphKey,
                       max_vertices: int, max_edges: int) -> tuple:
    """``sum_{i,a} dS_A/dX_{ia} dS_B/dXbar_{ia}`` expanded over distinct-index graphs.

    Returns ``(children, events)`` where ``children`` is
    ``((child, factor), ...)`` and ``events`` counts
    ``(eulerian(A), eulerian(B), eulerian(joined graph))`` before vertex
    identification.  Children beyond the vertex limit are not generated; the
    number skipped is the third entry.
    """
    if VACUUM in (key_a, key_b):
        return (), Counter(), 0
    return _quadratic_labeled(graph_from_key(key_a), graph_from_key(key_b), max_vertices, max_edges)


def _quadratic_labeled(ga: OrientedMultigraph, gb: OrientedMultigraph, max_vertices, max_edges):
    if ga.edge_count + gb.edge_count - 1 > max_edges:
        return (), Counter(), 0
    va, vb = ga.vertex_count, gb.vertex_count
    ea, eb = list(ga.edges), list(gb.edges)
    eul_a, eul_b = is_eulerian(ga), is_eulerian(gb)
    acc: dict = defaultdict(NPoly)
    events: Counter = Counter()
    skipped = 0
    for w1 in range(va):
        for a in (k for k, (s, _) in enumerate(ea) if s == w1):
            for w2 in range(vb):
                for b in (k for k, (_, t) in enumerate(eb) if t == w2):
                    def mb(u):
                        return w1 if u == w2 else va + u

                    joined = [e for k, e in enumerate(ea) if k != a]
                    joined += [(mb(s), mb(t)) for k, (s, t) in enumerate(eb) if k != b]
                    joined.append((mb(eb[b][0]), ea[a][1]))
                    deg = defaultdict(int)
                    for s, t in joined:
                        deg[s] += 1
                        deg[t] -= 1
                    events[(eul_a, eul_b, not any(deg.values()))] += 1
                    isolated = all(w1 not in e for e in joined)
                    base_vertices = va + vb - 1 - (1 if isolated else 0)
                    need = max(0, base_vertices - max_vertices)
                    left = [x for x in range(va) if x != w1]
                    right = [va + u for u in range(vb) if u != w2]
                    if need > min(len(left), len(right)):
                        skipped += 1
                        continue
                    for ident in _partial_matchings(left, right, need):
                        edges = [(ident.get(s, s), ident.get(t, t)) for s, t in joined]
                        rest = base_vertices - len(ident) - (0 if isolated else 1)
                        factor = _free_vertex_factor(rest) if isolated else _ONE
                        child = _encode(edges)
                        acc[child] = acc[child] + factor
    children = tuple((c, f) for c, f in acc.items() if f)
    return children, events, skipped


def labelings_agree(g_a: OrientedMultigraph, g_b: OrientedMultigraph | None = None,
                    perm_a=None, perm_b=None, max_vertices: int = 8, max_edges: int = 8) -> bool:
    """Redundancy check: surgery on relabelled copies gives the same canonical multiset.

    With one graph the Laplacian surgery is compared, with two the quadratic
    surgery.  ``perm_*`` default to reversing the vertex order.
    """
    def moved(g, perm):
        perm = perm if perm is not None else list(reversed(range(g.vertex_count)))
        return g.relabel(perm)

    if g_b is None:
        def table(g):
            return {(c, n): f for c, n, f in _laplacian_labeled(g)}

        return table(g_a) == table(moved(g_a, perm_a))
    first, _, _ = _quadratic_labeled(g_a, g_b, max_vertices, max_edges)
    second, _, _ = _quadratic_labeled(moved(g_a, perm_a), moved(g_b, perm_b), max_vertices, max_edges)
    return dict(first) == dict(second)


def _exact_record(key: CanonicalGraphKey, poly: NPoly) -> ScalingRecord:
    vc, aut, _ = _stats(key)
    scaled = poly.shift(vc) * aut
    x, _ = scaled.leading()
    return ScalingRecord.combine([(scaled.abs_sum(), float(x))])


def _factor_bound(f: NPoly) -> tuple[float, float]:
    x, _ = f.leading()
    return f.abs_sum(), float(x)


def initialize(spec: CumulantSpec, truncation: Truncation = Truncation()) -> FlowState:
    """Order-zero potential ``V_0`` from a cumulant specification.

    A cumulant graph ``G`` with value ``C_G`` enters as
    ``C_G / (|Aut G| N^(e/2))`` on the edge-reversed graph (``Tr(M J)`` pairs
    ``M_ij`` with ``J_ji``).  The Gaussian cumulant gives the 2-cycle and the
    double loop, each with ``alpha^2 / (2 N)``.
    """
    if truncation.max_t < 0:
        raise TruncationTooSmall("max_t must be >= 0")
    alpha2 = spec.alpha2
    terms: dict = {}
    if alpha2 != 0:
        if truncation.max_vertices < 2 or truncation.max_edges < 2:
            raise TruncationTooSmall("the Gaussian 2-cycle needs 2 vertices and 2 edges")
        for g in (OrientedMultigraph(2, ((0, 1), (1, 0))), OrientedMultigraph(1, ((0, 0), (0, 0)))):
            key = canonical_key(g)
            coef = NPoly.monomial(alpha2 / Fraction(symmetry_factor(g)), -1)
            terms[(key, 0, 0, "gaussian")] = FlowTerm(key, 0, 0, "gaussian", coef)
    for pt in spec.perturbations:
        g = pt.graph.graph()
        if g.vertex_count > truncation.max_vertices or g.edge_count > truncation.max_edges:
            raise TruncationTooSmall(f"perturbation graph {g.edges} exceeds the truncation")
        key = canonical_key(reverse(g))
        amp = pt.amplitude
        if isinstance(amp, (int, Fraction)):
            amp = Fraction(amp) / symmetry_factor(g)
        else:
            amp = amp / symmetry_factor(g)
        coef = NPoly.monomial(amp, -pt.n_exponent - Fraction(g.edge_count, 2))
        k = (key, 0, 0, "perturbation")
        if k in terms:
            terms[k].coefficient = terms[k].coefficient + coef
        else:
            terms[k] = FlowTerm(key, 0, 0, "perturbation", coef)
    for term in terms.values():
        if term.sector == "perturbation":
            term.record = _exact_record(term.graph, term.coefficient)
    return FlowState(terms, truncation, 0, alpha2)


def _record_of(term: FlowTerm) -> ScalingRecord:
    return term.record if term.record is not None else _exact_record(term.graph, term.coefficient)


def flow_step(state: FlowState) -> FlowState:
    """Compute the ``t^(order+1)`` terms; returns a new state."""
    tr = state.truncation
    k = state.order + 1
    if k > tr.max_t:
        raise TruncationTooSmall(f"state already at max_t = {tr.max_t}")
    inv_k = Fraction(1, k)
    by_order: dict[int, list[FlowTerm]] = defaultdict(list)
    for (g, t, n, s), term in state.terms.items():
        by_order[t].append(term)
    new: dict = {}
    contrib: dict = defaultdict(list)
    events: Counter = Counter()
    dropped = 0

    def keep(child):
        v, e = child.vertex_count, child.edge_count
        if child == VACUUM:
            return True
        if v > tr.max_vertices or e > tr.max_edges:
            return False
        if tr.prune_unreachable and k + e - 1 > tr.max_t:
            return False
        return True

    def add(child, n_deg, sector, coef, bound):
        nonlocal dropped
        if n_deg > 1:
            return
        if not keep(child):
            dropped += 1
            return
        key = (child, k, n_deg, sector)
        if key in new:
            new[key].coefficient = new[key].coefficient + coef
        else:
            new[key] = FlowTerm(child, k, n_deg, sector, coef)
        if bound is not None:
            contrib[key].append(bound)

    for term in by_order[k - 1]:
        vc_p, aut_p, _ = _stats(term.graph)
        rec = _record_of(term) if term.sector == "perturbation" else None
        for child, n_inc, factor in laplacian_children(term.graph):
            coef = term.coefficient * factor * inv_k
            bound = None
            if rec is not None:
                vc_c, aut_c, _ = _stats(child)
                fc, fx = _factor_bound(factor)
                bound = (
                    rec.bound_constant * fc * aut_c / aut_p / k,
                    rec.n_exponent + fx + vc_c - vc_p,
                )
            add(child, term.n_degree + n_inc, term.sector, coef, bound)

    for j in range(k):
        for ta in by_order[j]:
            vc_a, aut_a, _ = _stats(ta.graph)
            for tb in by_order[k - 1 - j]:
                n_deg = ta.n_degree + tb.n_degree
                if n_deg > 1:
                    continue
                children, ev, skipped = quadratic_children(
                    ta.graph, tb.graph, tr.max_vertices, tr.max_edges
                )
                events.update(ev)
                dropped += skipped
                if not children:
                    continue
                sector = "gaussian" if ta.sector == tb.sector == "gaussian" else "perturbation"
                vc_b, aut_b, _ = _stats(tb.graph)
                if sector == "perturbation":
                    ra, rb = _record_of(ta), _record_of(tb)
                base = ta.coefficient * tb.coefficient * inv_k
                for child, factor in children:
                    bound = None
                    if sector == "perturbation":
                        vc_c, aut_c, _ = _stats(child)
                        fc, fx = _factor_bound(factor)
                        bound = (
                            ra.bound_constant * rb.bound_constant * fc * aut_c / (aut_a * aut_b) / k,
                            ra.n_exponent + rb.n_exponent + fx + vc_c - vc_a - vc_b,
                        )
                    add(child, n_deg, sector, base * factor, bound)

    for key, term in new.items():
        if term.sector == "perturbation" and term.graph != VACUUM:
            term.record = ScalingRecord.combine(contrib[key])
    terms = dict(state.terms)
    terms.update({key: t for key, t in new.items() if t.coefficient or t.sector == "perturbation"})
    if dropped:
        log.info("flow order %d: %d surgery results dropped by truncation", k, dropped)
    return FlowState(
        terms, tr, k, state.alpha2, state.quadratic_events + events, state.dropped + dropped
    )


def run_flow(spec: CumulantSpec, truncation: Truncation = Truncation()) -> FlowState:
    state = initialize(spec, truncation)
    while state.order < truncation.max_t:
        state = flow_step(state)
    return state


# G(z) = 1/z + N^{-3/2} z^{-2} sum_i C_loop(1/z; i); with c = C / N^{1/2} and the
# index sum giving N, the net power of N in front of c_loop is zero.
_GREEN_PREFACTOR_POWER = Fraction(-3, 2) + 1 + Fraction(1, 2)


def green_series(state: FlowState, max_order: int, N=None) -> list[tuple[int, object]]:
    """Coefficients of ``1/z^p`` for ``p = 1..max_order``.

    The ``1/z^p`` coefficient (``p >= 2``) is the order-0-in-``n`` loop
    coefficient at ``t^(p-2)``.  With ``N=None`` the large-N limit (the
    ``N^0`` part) is returned, otherwise the exact finite-N value.
    """
    assert _GREEN_PREFACTOR_POWER == 0
    if max_order - 2 > state.order:
        raise InsufficientOrder(
            f"1/z^{max_order} needs t^{max_order - 2}, state reached t^{state.order}"
        )
    out = [(1, Fraction(1))]
    for p in range(2, max_order + 1):
        poly = state.coefficient(LOOP, p - 2, 0)
        if N is None and poly.leading()[0] > 0:
            log.warning("1/z^%d coefficient grows with N (%r); returning its N^0 part", p, poly)
        if N is None:
            out.append((p, poly.coefficient(0)))
        else:
            out.append((p, poly(N)))
    return out


@dataclass
class PropagationReport:
    hypotheses_hold: bool
    ledger: list[dict]
    violations: list[dict]
    quadratic_events: dict
    join_rule_consistent: bool

    @property
    def passed(self) -> bool:
        return not self.violations and self.join_rule_consistent

    def to_dict(self) -> dict:
        return {
            "hypotheses_hold": self.hypotheses_hold,
            "passed": self.passed,
            "join_rule_consistent": self.join_rule_consistent,
            "quadratic_events": {str(k): v for k, v in self.quadratic_events.items()},
            "violations": self.violations,
            "ledger": self.ledger,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def verify_bound_propagation(state: FlowState, raise_on_violation: bool = True) -> PropagationReport:
    """Check the propagated bounds on every order-0-in-``n`` term.

    Perturbation terms on Eulerian graphs must be vanishing, the others
    bounded (exponent <= 0); Gaussian terms must be bounded.  The exact
    coefficient must never exceed its worst-case record.  Checks are only
    binding when the order-zero perturbations satisfy the hypotheses.
    """
    ledger, violations = [], []
    hypotheses = True
    for term in state.at(0, 0, "perturbation"):
        _, _, eul = _stats(term.graph)
        rec = term.record
        if (eul and not rec.vanishing) or (not eul and rec.n_exponent > 0):
            hypotheses = False
    for key in sorted(state.terms, key=lambda k: (k[1], k[3], k[0])):
        g, t, n, sector = key
        term = state.terms[key]
        if n != 0 or g == VACUUM:
            continue
        _, _, eul = _stats(g)
        exact = _exact_record(g, term.coefficient)
        entry = {
            "graph": graph_from_key(g).to_dict(),
            "t_power": t,
            "sector": sector,
            "eulerian": eul,
            "exact_exponent": exact.n_exponent,
        }
        problems = []
        if sector == "perturbation":
            rec = term.record
            entry.update(rec.to_dict())
            if eul and not rec.vanishing:
                problems.append("eulerian perturbation not vanishing")
            if not eul and not rec.n_exponent <= 0:
                problems.append("non-eulerian perturbation unbounded")
            if exact.n_exponent > rec.n_exponent + 1e-12:
                problems.append("exact coefficient exceeds its worst-case record")
        elif exact.n_exponent > 0:
            problems.append("gaussian coefficient unbounded")
        entry["problems"] = problems
        ledger.append(entry)
        if problems:
            violations.append(entry)
    join_ok = all((a and b) == joined for (a, b, joined) in state.quadratic_events)
    report = PropagationReport(hypotheses, ledger, violations, dict(state.quadratic_events), join_ok)
    if raise_on_violation and hypotheses and not report.passed:
        raise PropagationViolation(
            f"{len(violations)} ledger violations; join rule consistent: {join_ok}"
        )
    return report
