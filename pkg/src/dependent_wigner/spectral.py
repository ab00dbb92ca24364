"""Spectra of sampled matrices and the semicircle reference law.

All statistics refer to the rescaled matrix ``M / sqrt(N)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Sequence

import numpy as np

from .errors import BackendFailure, EmptyInput, OnCut

__all__ = [
    "SpectralSample",
    "SemicircleLaw",
    "eigenvalues",
    "trace_moment",
    "spectral_sample",
    "catalan",
    "semicircle_moment",
    "semicircle_density",
    "semicircle_cdf",
    "semicircle_inverse_cdf",
    "ks_distance",
    "green_function_closed",
    "green_series_closed",
    "histogram_table",
    "histogram_l1",
    "moment_table",
]

EigenBackend = Callable[[np.ndarray], np.ndarray]


def _default_backend(H: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(H)


def eigenvalues(m: np.ndarray, backend: EigenBackend = _default_backend) -> np.ndarray:
    """Sorted spectrum of ``m / sqrt(N)``.

    ``backend`` may be any dense Hermitian eigenvalue solver returning real
    eigenvalues.
    """
    N = m.shape[0]
    try:
        lam = np.asarray(backend(m / math.sqrt(N)), dtype=float)
    except np.linalg.LinAlgError as exc:
        raise BackendFailure(str(exc)) from exc
    if lam.shape != (N,) or not np.all(np.isfinite(lam)):
        raise BackendFailure("eigensolver returned a malformed spectrum")
    return np.sort(lam)


def _trace_powers(m: np.ndarray, ks: Sequence[int]) -> dict[int, float]:
    # Tr M^k via repeated products; Tr(A B) = sum(A * B^T)
    kmax = max(ks)
    powers = {1: m}
    cur = m
    for k in range(2, (kmax + 1) // 2 + 1):
        cur = cur @ m
        powers[k] = cur
    out = {}
    for k in ks:
        a = k // 2
        b = k - a
        if a == 0:
            out[k] = float(np.trace(m).real)
        else:
            out[k] = float(np.sum(powers[a] * powers[b].T).real)
    return out


def trace_moment(samples, k: int) -> tuple[float, float]:
    """Mean and standard error of ``Tr M^k / N^(1 + k/2)`` over ``samples``."""
    samples = list(samples)
    if not samples:
        raise EmptyInput("no samples")
    if k < 1:
        raise ValueError("k must be >= 1")
    vals = np.array(
        [_trace_powers(np.asarray(m), [k])[k] / m.shape[0] ** (1 + k / 2) for m in samples]
    )
    se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return float(vals.mean()), se


@dataclass
class SpectralSample:
    N: int
    eigenvalue_batches: list[np.ndarray]
    trace_moments: dict[int, tuple[float, float]] = field(default_factory=dict)

    def pooled(self) -> np.ndarray:
        return np.sort(np.concatenate(self.eigenvalue_batches))


def spectral_sample(samples, ks: Sequence[int] = (1, 2, 3, 4, 5, 6)) -> SpectralSample:
    """Eigenvalues and normalized trace moments of a batch of matrices."""
    samples = list(samples)
    if not samples:
        raise EmptyInput("no samples")
    N = samples[0].shape[0]
    batches = [eigenvalues(m) for m in samples]
    vals = {k: [] for k in ks}
    for m in samples:
        tr = _trace_powers(m, ks)
        for k in ks:
            vals[k].append(tr[k] / N ** (1 + k / 2))
    moments = {}
    for k in ks:
        v = np.array(vals[k])
        se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
        moments[k] = (float(v.mean()), se)
    return SpectralSample(N, batches, moments)


@dataclass(frozen=True)
class SemicircleLaw:
    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return -2 * self.alpha, 2 * self.alpha

    def density(self, x):
        return semicircle_density(x, self.alpha)

    def cdf(self, x):
        return semicircle_cdf(x, self.alpha)

    def moment(self, k: int) -> float:
        return semicircle_moment(k, self.alpha)


def catalan(m: int) -> int:
    return comb(2 * m, m) // (m + 1)


def semicircle_moment(k: int, alpha=1.0):
    """``Catalan(k/2) alpha^k`` for even ``k``, zero for odd ``k``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k % 2:
        return 0 * alpha
    return catalan(k // 2) * alpha**k


def semicircle_density(x, alpha=1.0):
    """``sqrt(4 alpha^2 - x^2) / (2 pi alpha^2)`` on ``[-2 alpha, 2 alpha]``."""
    x = np.asarray(x, dtype=float)
    a2 = float(alpha) ** 2
    inside = np.clip(4 * a2 - x * x, 0.0, None)
    out = np.sqrt(inside) / (2 * math.pi * a2)
    return out if out.ndim else float(out)


def semicircle_cdf(x, alpha=1.0):
    """Closed-form antiderivative of :func:`semicircle_density`."""
    u = np.clip(np.asarray(x, dtype=float) / (2 * float(alpha)), -1.0, 1.0)
    out = 0.5 + (u * np.sqrt(1 - u * u) + np.arcsin(u)) / math.pi
    return out if out.ndim else float(out)


def semicircle_inverse_cdf(p, alpha=1.0, iterations: int = 60):
    """Inverse CDF by bisection (vectorized)."""
    p = np.asarray(p, dtype=float)
    lo = np.full(p.shape, -2.0 * alpha)
    hi = np.full(p.shape, 2.0 * alpha)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = semicircle_cdf(mid, alpha) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def ks_distance(sample: SpectralSample | np.ndarray, law: SemicircleLaw) -> float:
    """Kolmogorov-Smirnov distance of the pooled spectrum to the semicircle."""
    if isinstance(sample, SpectralSample):
        if not sample.eigenvalue_batches:
            raise EmptyInput("no eigenvalue batches")
        x = sample.pooled()
    else:
        x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise EmptyInput("no eigenvalues")
    F = semicircle_cdf(x, law.alpha)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def green_function_closed(z: complex, alpha=1.0) -> complex:
    """``(z - sqrt(z - 2a) sqrt(z + 2a)) / (2 a^2)``, the branch decaying like ``1/z``.

    The product of principal square roots puts the cut exactly on
    ``[-2 alpha, 2 alpha]``; it satisfies ``G = 1 / (z - alpha^2 G)``.
    Evaluated as ``2 / (z + sqrt(z - 2a) sqrt(z + 2a))`` to avoid cancellation
    at large ``|z|``.
    """
    z = complex(z)
    a = float(alpha)
    if a == 0:
        if z == 0:
            raise OnCut("z = 0 is the pole of 1/z")
        return 1 / z
    if abs(z.imag) <= 1e-12 and -2 * a - 1e-12 <= z.real <= 2 * a + 1e-12:
        raise OnCut(f"z = {z} lies on the cut [-2 alpha, 2 alpha]")
    root = cmath.sqrt(z - 2 * a) * cmath.sqrt(z + 2 * a)
    return 2 / (z + root)


def green_series_closed(max_power: int, alpha=1.0, radius: float | None = None,
                        points: int = 1024) -> list[complex]:
    """Coefficients of ``1/z^p``, ``p = 1..max_power``, by contour integration.

    Uses the trapezoid rule on ``|z| = radius``, which converges geometrically
    for the analytic function ``G`` outside the cut.  A radius close to the
    cut keeps the rounding error of the ``z^p`` weights small.
    """
    a = float(alpha)
    R = radius if radius is not None else 2.3 * max(a, 0.5)
    theta = 2 * math.pi * np.arange(points) / points
    z = R * np.exp(1j * theta)
    G = np.array([green_function_closed(w, a) for w in z])
    # G = sum_p c_p z^-p  =>  c_p = mean(G z^p)
    return [complex(np.mean(G * z**p)) for p in range(1, max_power + 1)]


def histogram_table(sample: SpectralSample, alpha=1.0, bins: int = 61):
    """Rows ``(bin_left, bin_right, count, empirical_density, semicircle_density)``."""
    x = sample.pooled()
    lo, hi = -2.0 * alpha, 2.0 * alpha
    lo = min(lo, float(x.min()))
    hi = max(hi, float(x.max()))
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    width = edges[1:] - edges[:-1]
    emp = counts / (x.size * width)
    # exact bin averages of the reference density
    ref = (semicircle_cdf(edges[1:], alpha) - semicircle_cdf(edges[:-1], alpha)) / width
    return [
        (float(edges[b]), float(edges[b + 1]), int(counts[b]), float(emp[b]), float(ref[b]))
        for b in range(bins)
    ]


def histogram_l1(sample: SpectralSample, alpha=1.0, bins: int = 61) -> float:
    """L1 distance between the histogram density and the semicircle."""
    return float(sum(abs(e - r) * (hi - lo) for lo, hi, _, e, r in histogram_table(sample, alpha, bins)))


def moment_table(sample: SpectralSample, alpha=1.0):
    """Rows ``(k, estimate, stderr, semicircle, z_score)``."""
    rows = []
    for k in sorted(sample.trace_moments):
        est, se = sample.trace_moments[k]
        ref = float(semicircle_moment(k, alpha))
        z = (est - ref) / se if se > 0 else (0.0 if est == ref else math.inf)
        rows.append((k, est, se, ref, z))
    return rows
