"""Samplers for Hermitian random matrix ensembles.

Four families are covered:

* :class:`GUE` -- Gaussian, ``<M_ij M_kl>_c = alpha^2 delta_il delta_jk``;
* :class:`WignerIID` -- independent entries with arbitrary centred laws;
* :class:`CommonNoise` -- GUE plus ``s / N**beta`` times a fixed 0/1 pattern,
  with ``s`` a single scalar shared by all entries.  Its joint cumulants are
  ``kappa_e(s) N**(-e beta)`` on every graph supported by the pattern, which
  makes ``beta`` a dial for the scaling hypotheses;
* :class:`InvariantPotential` -- ``exp(-Tr V(M))`` with
  ``V(M) = M^2/2 + sum_p g_p N^(1-p/2) M^p / p``, sampled by Metropolis.

Matrices are plain complex ``ndarray``s; every sampler builds them from the
upper triangle so that ``M[j, i] == conj(M[i, j])`` holds bit for bit and the
diagonal is exactly real.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Union

import numpy as np

from .cumulants import CumulantSpec, PerturbationTerm, as_exact
from .errors import InvalidSpec, UnboundedPotential, Unsupported
from .graphs import OrientedMultigraph, canonical_key, enumerate_graphs

__all__ = [
    "Distribution",
    "GUE",
    "WignerIID",
    "CommonNoise",
    "InvariantPotential",
    "EnsembleSpec",
    "ensemble_from_dict",
    "hermitian_from_parts",
    "is_hermitian",
    "sample",
    "sample_batch",
    "MetropolisChain",
    "metropolis_invariant",
    "trace_action",
    "cumulant_spec_of",
    "cumulants_from_raw_moments",
    "write_matrix",
    "read_matrix",
]

log = logging.getLogger(__name__)


def cumulants_from_raw_moments(moments):
    """Univariate cumulants ``kappa_1..kappa_n`` from raw moments ``m_1..m_n``."""
    m = [1] + list(moments)
    kappa = [0]
    for n in range(1, len(m)):
        k = m[n] - sum(comb(n - 1, j - 1) * kappa[j] * m[n - j] for j in range(1, n))
        kappa.append(k)
    return kappa[1:]


_TAGS = ("normal", "uniform", "rademacher", "exponential")


@dataclass(frozen=True)
class Distribution:
    """A real scalar law.

    ``scale`` is the standard deviation for ``normal``, the half-width for
    ``uniform``, the magnitude for ``rademacher`` and the mean of the
    underlying exponential for ``exponential`` (which is centred).  ``mean``
    shifts the draw.
    """

    tag: str = "normal"
    scale: float = 1.0
    mean: float = 0.0

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise InvalidSpec(f"unknown distribution tag {self.tag!r}")
        if self.scale < 0:
            raise InvalidSpec("scale must be non-negative")

    def draw(self, rng: np.random.Generator, size=None):
        s = float(self.scale)
        if self.tag == "normal":
            x = rng.normal(0.0, 1.0, size) * s
        elif self.tag == "uniform":
            x = rng.uniform(-1.0, 1.0, size) * s
        elif self.tag == "rademacher":
            x = (2.0 * rng.integers(0, 2, size) - 1.0) * s
        else:
            x = (rng.exponential(1.0, size) - 1.0) * s
        return x + float(self.mean)

    def raw_moments(self, n: int):
        """Exact raw moments ``E[X^k]``, ``k = 1..n``."""
        s = as_exact(self.scale)
        mu = as_exact(self.mean)
        if self.tag == "normal":
            centred = [0 if k % 2 else math.prod(range(k - 1, 0, -2)) * s**k for k in range(n + 1)]
        elif self.tag == "uniform":
            centred = [0 if k % 2 else Fraction(1, k + 1) * s**k for k in range(n + 1)]
        elif self.tag == "rademacher":
            centred = [0 if k % 2 else s**k for k in range(n + 1)]
        else:
            # E[(E - 1)^k] for E ~ Exp(1)
            centred = [
                sum(comb(k, r) * factorial(r) * (-1) ** (k - r) for r in range(k + 1)) * s**k
                for k in range(n + 1)
            ]
        centred[0] = 1
        return [
            sum(comb(k, r) * centred[r] * mu ** (k - r) for r in range(k + 1))
            for k in range(1, n + 1)
        ]

    def cumulant(self, n: int):
        return cumulants_from_raw_moments(self.raw_moments(n))[n - 1]

    @property
    def variance(self):
        return self.cumulant(2)

    def to_dict(self) -> dict:
        return {"tag": self.tag, "scale": float(self.scale), "mean": float(self.mean)}

    @classmethod
    def from_dict(cls, data: dict) -> "Distribution":
        return cls(
            data.get("tag", "normal"),
            as_exact(data.get("scale", 1)),
            as_exact(data.get("mean", 0)),
        )


@dataclass(frozen=True)
class GUE:
    alpha: float = 1.0
    kind = "gue"

    def __post_init__(self):
        if self.alpha < 0:
            raise InvalidSpec("alpha must be non-negative")


@dataclass(frozen=True)
class WignerIID:
    """Independent entries: ``offdiag`` is the law of each of Re and Im above the diagonal."""

    diagonal: Distribution = Distribution("normal", 1.0)
    offdiag: Distribution = Distribution("normal", math.sqrt(0.5))
    kind = "wigner_iid"

    def __post_init__(self):
        if self.offdiag.mean != 0:
            raise InvalidSpec("off-diagonal entries must have mean zero")

    @property
    def alpha(self) -> float:
        return math.sqrt(2 * float(self.offdiag.variance))


@dataclass(frozen=True)
class CommonNoise:
    alpha: float = 1.0
    noise: Distribution = Distribution("uniform", 1.0)
    beta: float = 0.5
    pattern: str = "all_ones"
    kind = "common_noise"

    def __post_init__(self):
        if self.alpha <= 0:
            raise InvalidSpec("alpha must be positive")
        if self.beta < 0:
            raise InvalidSpec("beta must be non-negative")
        if self.pattern not in ("all_ones", "off_diagonal"):
            raise InvalidSpec(f"unknown pattern {self.pattern!r}")
        if self.noise.mean != 0:
            raise InvalidSpec("the shared noise must be centred")

    def pattern_matrix(self, N: int) -> np.ndarray:
        P = np.ones((N, N))
        if self.pattern == "off_diagonal":
            np.fill_diagonal(P, 0.0)
        return P


@dataclass(frozen=True)
class InvariantPotential:
    """``V(M) = M^2/2 + sum_p g_p N^(1-p/2) M^p / p`` for ``p >= 3``.

    ``steps`` sweeps separate consecutive returned samples.  ``step_size =
    None`` tunes the proposal width during burn-in towards 45% acceptance.
    """

    couplings: tuple = ()
    steps: int = 5
    step_size: float | None = None
    burn_in: int = 100
    kind = "invariant_potential"

    def __post_init__(self):
        items = dict(self.couplings)
        cleaned = tuple(sorted((int(p), float(g)) for p, g in items.items()))
        object.__setattr__(self, "couplings", cleaned)
        if any(p < 3 for p, _ in cleaned):
            raise InvalidSpec("couplings are indexed by p >= 3")
        live = [(p, g) for p, g in cleaned if g != 0]
        if live:
            p, g = live[-1]
            if p % 2 or g < 0:
                raise UnboundedPotential(
                    f"leading term g_{p} = {g} leaves Tr V unbounded below"
                )
        if self.steps < 1 or self.burn_in < 0:
            raise InvalidSpec("steps must be >= 1 and burn_in >= 0")

    def action_terms(self, N: int):
        """``(powers, weights)`` with ``Tr V = sum_k weights[k] Tr M^powers[k]``."""
        powers = [2]
        weights = [0.5]
        for p, g in self.couplings:
            if g != 0:
                powers.append(p)
                weights.append(g * N ** (1 - p / 2) / p)
        return np.array(powers, dtype=np.int64), np.array(weights, dtype=np.float64)


EnsembleSpec = Union[GUE, WignerIID, CommonNoise, InvariantPotential]


def ensemble_to_dict(spec: EnsembleSpec) -> dict:
    if isinstance(spec, GUE):
        return {"kind": "gue", "alpha": float(spec.alpha)}
    if isinstance(spec, WignerIID):
        return {
            "kind": "wigner_iid",
            "diagonal": spec.diagonal.to_dict(),
            "offdiag": spec.offdiag.to_dict(),
        }
    if isinstance(spec, CommonNoise):
        return {
            "kind": "common_noise",
            "alpha": float(spec.alpha),
            "noise": spec.noise.to_dict(),
            "beta": float(spec.beta),
            "pattern": spec.pattern,
        }
    return {
        "kind": "invariant_potential",
        "couplings": {str(p): g for p, g in spec.couplings},
        "steps": spec.steps,
        "step_size": spec.step_size,
        "burn_in": spec.burn_in,
    }


def ensemble_from_dict(data: dict) -> EnsembleSpec:
    kind = data.get("kind")
    if kind == "gue":
        return GUE(as_exact(data.get("alpha", 1)))
    if kind == "wigner_iid":
        return WignerIID(
            Distribution.from_dict(data.get("diagonal", {})),
            Distribution.from_dict(data.get("offdiag", {"scale": math.sqrt(0.5)})),
        )
    if kind == "common_noise":
        beta = data.get("beta", 0.5)
        return CommonNoise(
            as_exact(data.get("alpha", 1)),
            Distribution.from_dict(data.get("noise", {"tag": "uniform"})),
            math.inf if beta in ("inf", None) else as_exact(beta),
            data.get("pattern", "all_ones"),
        )
    if kind == "invariant_potential":
        return InvariantPotential(
            tuple((int(p), float(g)) for p, g in data.get("couplings", {}).items()),
            int(data.get("steps", 5)),
            data.get("step_size"),
            int(data.get("burn_in", 100)),
        )
    raise InvalidSpec(f"unknown ensemble kind {kind!r}")


def hermitian_from_parts(N: int, upper: np.ndarray, diagonal: np.ndarray) -> np.ndarray:
    """Hermitian matrix from strictly-upper entries (row-major) and a real diagonal."""
    M = np.zeros((N, N), dtype=np.complex128)
    iu = np.triu_indices(N, 1)
    M[iu] = upper
    M[(iu[1], iu[0])] = np.conj(upper)
    M[np.diag_indices(N)] = np.asarray(diagonal, dtype=np.float64)
    return M


def is_hermitian(M: np.ndarray) -> bool:
    """Bit-exact check of ``M == M^dagger`` with a real diagonal."""
    return bool(np.array_equal(M, M.conj().T)) and not np.any(np.diag(M).imag)


def _gue(alpha: float, N: int, rng: np.random.Generator) -> np.ndarray:
    a = float(alpha)
    m = N * (N - 1) // 2
    parts = rng.normal(0.0, 1.0, size=(2, m)) * (a * math.sqrt(0.5))
    diag = rng.normal(0.0, 1.0, size=N) * a
    return hermitian_from_parts(N, parts[0] + 1j * parts[1], diag)


def sample(spec: EnsembleSpec, N: int, seed) -> np.ndarray:
    """Draw one matrix; identical ``(spec, N, seed)`` give identical bits."""
    if N < 1:
        raise InvalidSpec("N must be positive")
    if isinstance(spec, InvariantPotential):
        return metropolis_invariant(spec, N, seed)
    rng = np.random.default_rng(seed)
    if isinstance(spec, GUE):
        return _gue(spec.alpha, N, rng)
    if isinstance(spec, WignerIID):
        m = N * (N - 1) // 2
        re = spec.offdiag.draw(rng, m)
        im = spec.offdiag.draw(rng, m)
        diag = spec.diagonal.draw(rng, N)
        return hermitian_from_parts(N, re + 1j * im, diag)
    if isinstance(spec, CommonNoise):
        M = _gue(spec.alpha, N, rng)
        s = float(spec.noise.draw(rng))
        amp = 0.0 if math.isinf(spec.beta) else s / N ** float(spec.beta)
        return M + amp * spec.pattern_matrix(N)
    raise InvalidSpec(f"unsupported ensemble {spec!r}")


def sample_batch(spec: EnsembleSpec, N: int, count: int, seed: int, workers: int = 1) -> np.ndarray:
    """``count`` independent draws; draw ``k`` uses the stream ``(seed, N, k)``.

    Invariant-potential ensembles return ``count`` consecutive samples of one
    Metropolis chain seeded by ``(seed, N)``.
    """
    if isinstance(spec, InvariantPotential):
        chain = MetropolisChain(spec, N, (seed, N))
        return np.stack([chain.sample() for _ in range(count)])
    seeds = [(seed, N, k) for k in range(count)]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            mats = list(pool.map(lambda s: sample(spec, N, s), seeds))
    else:
        mats = [sample(spec, N, s) for s in seeds]
    return np.stack(mats)


def trace_action(spec: InvariantPotential, M: np.ndarray) -> float:
    """``Tr V(M)`` evaluated from scratch through the spectrum."""
    lam = np.linalg.eigvalsh(M)
    powers, weights = spec.action_terms(M.shape[0])
    return float(sum(w * np.sum(lam**p) for p, w in zip(powers, weights)))


class MetropolisChain:
    """Entry-wise Metropolis chain for an :class:`InvariantPotential`.

    Each sweep proposes one Gaussian move per upper-triangular entry (diagonal
    included), in a random order.  The starting point is a GUE draw.
    """

    def __init__(self, spec: InvariantPotential, N: int, seed):
        from . import _metropolis

        self._kernel = _metropolis
        self.spec = spec
        self.N = N
        self.rng = np.random.default_rng(seed)
        self.M = _gue(1.0, N, self.rng)
        self.powers, self.weights = spec.action_terms(N)
        self.step = 1.0 if spec.step_size is None else float(spec.step_size)
        self.proposed = 0
        self.accepted = 0
        self._tuned = False
        iu = np.triu_indices(N)
        self._rows = iu[0].astype(np.int64)
        self._cols = iu[1].astype(np.int64)

    def sweep(self) -> float:
        n = self._rows.shape[0]
        order = self.rng.permutation(n)
        xr = self.rng.normal(size=n)
        xi = self.rng.normal(size=n)
        u = self.rng.random(n)
        acc = self._kernel.sweep(
            self.M, self._rows[order], self._cols[order], xr, xi, u,
            self.step, self.powers, self.weights,
        )
        self.proposed += n
        self.accepted += acc
        return acc / n

    def burn_in(self):
        for _ in range(self.spec.burn_in):
            rate = self.sweep()
            if self.spec.step_size is None:
                self.step *= math.exp(rate - 0.45)
        self.proposed = self.accepted = 0
        self._tuned = True
        log.info("metropolis burn-in done: N=%d step=%.4g", self.N, self.step)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")

    def sample(self) -> np.ndarray:
        if not self._tuned:
            self.burn_in()
        for _ in range(self.spec.steps):
            self.sweep()
        log.debug("metropolis acceptance rate %.3f", self.acceptance_rate)
        return self.M.copy()


_CHAINS: dict = {}


def metropolis_invariant(spec: InvariantPotential, N: int, seed) -> np.ndarray:
    """Next sample of the chain keyed by ``(spec, N, seed)``; later calls continue it."""
    key = (spec, N, seed if not isinstance(seed, list) else tuple(seed))
    chain = _CHAINS.get(key)
    if chain is None:
        chain = _CHAINS[key] = MetropolisChain(spec, N, seed)
    out = chain.sample()
    log.info("metropolis chain %r acceptance %.3f", key, chain.acceptance_rate)
    return out


def _pair_graph(a: int, b: int) -> OrientedMultigraph:
    return OrientedMultigraph(2, ((0, 1),) * a + ((1, 0),) * b)


def _loops(n: int) -> OrientedMultigraph:
    return OrientedMultigraph(1, ((0, 0),) * n)


def cumulant_spec_of(spec: EnsembleSpec, max_order: int = 4) -> CumulantSpec:
    """Analytic joint cumulants of an ensemble, up to ``max_order`` factors."""
    if isinstance(spec, GUE):
        return CumulantSpec(as_exact(spec.alpha))
    if isinstance(spec, CommonNoise):
        terms = []
        graphs = enumerate_graphs(max_vertices=min(2 * max_order, 8), max_edges=max_order)
        for e in range(2, max_order + 1):
            kappa = spec.noise.cumulant(e)
            if kappa == 0:
                continue
            theta = math.inf if math.isinf(spec.beta) else e * as_exact(spec.beta)
            if math.isinf(theta):
                continue
            for g in graphs:
                if g.edge_count != e:
                    continue
                if spec.pattern == "off_diagonal" and any(s == t for s, t in g.edges):
                    continue
                terms.append(PerturbationTerm(canonical_key(g), kappa, theta))
        return CumulantSpec(as_exact(spec.alpha), tuple(terms))
    if isinstance(spec, WignerIID):
        part = spec.offdiag
        alpha2 = 2 * part.variance
        terms = []
        for n in range(1, max_order + 1):
            kd = spec.diagonal.cumulant(n)
            if n == 2:
                kd = kd - alpha2
            if kd != 0:
                terms.append(PerturbationTerm(canonical_key(_loops(n)), kd, 0))
            if n < 2:
                continue
            ko = part.cumulant(n)
            if n % 2 and ko != 0:
                raise Unsupported(
                    "odd off-diagonal cumulants depend on the index order; not index-uniform"
                )
            for a in range(n // 2, n + 1):
                b = n - a
                # x + iy and x - iy with x, y iid: kappa_n (1 + i^(a-b))
                amp = ko * (2 if (a - b) % 4 == 0 else 0)
                if n == 2 and a == 1:
                    amp -= alpha2
                if amp != 0:
                    terms.append(PerturbationTerm(canonical_key(_pair_graph(a, b)), amp, 0))
        return CumulantSpec(_sqrt_exact(alpha2), tuple(terms))
    raise Unsupported("cumulants of invariant ensembles are not available in closed form")


def _sqrt_exact(x):
    if isinstance(x, Fraction):
        n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if n * n == x.numerator and d * d == x.denominator:
            return Fraction(n, d)
    return math.sqrt(x)


def write_matrix(path, M: np.ndarray):
    """Little-endian dump: uint64 dimension, then complex128 entries row-major."""
    M = np.ascontiguousarray(M, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(np.uint64(M.shape[0]).astype("<u8").tobytes())
        fh.write(M.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        n = int(np.frombuffer(fh.read(8), dtype="<u8")[0])
        data = np.frombuffer(fh.read(16 * n * n), dtype="<c16")
    return data.reshape(n, n).astype(np.complex128)
