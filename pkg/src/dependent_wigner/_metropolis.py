"""Compiled kernels for entry-wise Metropolis on ``exp(-sum_p w_p Tr M^p)``.

A proposal changes one Hermitian pair ``(i, j), (j, i)`` (or one diagonal
entry), i.e. ``M -> M + D`` with ``D = U C U^dagger`` of rank at most two.
``Tr (M + D)^p - Tr M^p`` is the sum over cyclic words in ``M`` and ``D``
containing at least one ``D``; each word collapses to a trace of 2x2 blocks
``B_q = U^dagger M^q U``.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _power_vectors(M, i, h):
    n = M.shape[0]
    out = np.zeros((h + 1, n), dtype=np.complex128)
    out[0, i] = 1.0
    if h >= 1:
        for a in range(n):
            out[1, a] = M[a, i]
    for r in range(2, h + 1):
        for a in range(n):
            acc = 0j
            for b in range(n):
                acc += M[a, b] * out[r - 1, b]
            out[r, a] = acc
    return out


@njit(cache=True)
def _vdot(x, y):
    acc = 0j
    for a in range(x.shape[0]):
        acc += np.conj(x[a]) * y[a]
    return acc


@njit(cache=True)
def _blocks(M, i, j, p):
    """``B[q] = [[M^q_ii, M^q_ij], [M^q_ji, M^q_jj]]`` for ``q < p``."""
    h = p // 2
    vi = _power_vectors(M, i, h)
    vj = _power_vectors(M, j, h)
    B = np.zeros((p, 2, 2), dtype=np.complex128)
    for q in range(p):
        r = q // 2
        s = q - r
        B[q, 0, 0] = _vdot(vi[r], vi[s])
        B[q, 0, 1] = _vdot(vi[r], vj[s])
        B[q, 1, 0] = _vdot(vj[r], vi[s])
        B[q, 1, 1] = _vdot(vj[r], vj[s])
    return B


@njit(cache=True)
def _mul2(A, Bm):
    out = np.empty((2, 2), dtype=np.complex128)
    out[0, 0] = A[0, 0] * Bm[0, 0] + A[0, 1] * Bm[1, 0]
    out[0, 1] = A[0, 0] * Bm[0, 1] + A[0, 1] * Bm[1, 1]
    out[1, 0] = A[1, 0] * Bm[0, 0] + A[1, 1] * Bm[1, 0]
    out[1, 1] = A[1, 0] * Bm[0, 1] + A[1, 1] * Bm[1, 1]
    return out


@njit(cache=True)
def delta_trace_power(M, i, j, d, p):
    """Exact ``Tr (M + D)^p - Tr M^p`` for the Hermitian update at ``(i, j)``."""
    if i == j:
        h = p // 2
        vi = _power_vectors(M, i, h)
        b = np.zeros(p, dtype=np.complex128)
        for q in range(p):
            r = q // 2
            b[q] = _vdot(vi[r], vi[q - r])
    else:
        B = _blocks(M, i, j, p)
        C = np.zeros((2, 2), dtype=np.complex128)
        C[0, 1] = d
        C[1, 0] = np.conj(d)
    total = 0j
    gaps = np.zeros(p, dtype=np.int64)
    for mask in range(1, 1 << p):
        # positions of D letters in the word
        r = 0
        first = -1
        prev = -1
        for pos in range(p):
            if (mask >> pos) & 1:
                if first < 0:
                    first = pos
                else:
                    gaps[r - 1] = pos - prev - 1
                prev = pos
                r += 1
        # last gap wraps around to the first D
        gaps[r - 1] = (p - 1 - prev) + first
        if i == j:
            acc = 1.0 + 0j
            for k in range(r):
                acc *= d * b[gaps[k]]
            total += acc
        else:
            P = np.eye(2, dtype=np.complex128) + 0j
            for k in range(r):
                P = _mul2(_mul2(P, C), B[gaps[k]])
            total += P[0, 0] + P[1, 1]
    return total.real


@njit(cache=True)
def delta_action(M, i, j, d, powers, weights):
    """Change of ``sum_p w_p Tr M^p`` under the proposal."""
    out = 0.0
    for k in range(powers.shape[0]):
        p = powers[k]
        w = weights[k]
        if w == 0.0:
            continue
        if p == 2:
            if i == j:
                m = M[i, i].real
                out += w * ((m + d.real) ** 2 - m * m)
            else:
                m = M[i, j]
                out += w * 2.0 * (abs(m + d) ** 2 - abs(m) ** 2)
        else:
            out += w * delta_trace_power(M, i, j, d, p)
    return out


@njit(cache=True)
def sweep(M, ii, jj, xr, xi, u, step, powers, weights):
    """Run one proposal per entry of ``ii``; returns the number accepted."""
    accepted = 0
    root_half = np.sqrt(0.5)
    for k in range(ii.shape[0]):
        i = ii[k]
        j = jj[k]
        if i == j:
            d = step * xr[k] + 0j
        else:
            d = step * root_half * (xr[k] + 1j * xi[k])
        dS = delta_action(M, i, j, d, powers, weights)
        if dS <= 0.0 or u[k] < np.exp(-dS):
            if i == j:
                M[i, i] = M[i, i].real + d.real
            else:
                z = M[i, j] + d
                M[i, j] = z
                M[j, i] = np.conj(z)
            accepted += 1
    return accepted
