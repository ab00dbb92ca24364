"""
Exact finite-N moments
======================

Brute force over all index tuples, checked against Wick pairings, then
extrapolated in 1/N.
"""
from fractions import Fraction

from dependent_wigner.cumulants import CumulantSpec
from dependent_wigner.ensembles import CommonNoise, cumulant_spec_of
from dependent_wigner.oracle import asymptotic_trend, exact_trace_moment, wick_pairing_moment

gue = CumulantSpec(1)
for N in range(1, 6):
    row = [exact_trace_moment(gue, N, k) for k in (2, 4, 6)]
    same = all(r == wick_pairing_moment(k, N) for r, k in zip(row, (2, 4, 6)))
    print(f"N={N}: m2={row[0]} m4={row[1]} m6={row[2]} (pairings agree: {same})")

limit, _ = asymptotic_trend(gue, 6, [2, 3, 4, 5, 6])
print("k=6 extrapolated limit:", limit)

noisy = cumulant_spec_of(CommonNoise(1, beta=Fraction(1)), max_order=4)
limit, values = asymptotic_trend(noisy, 4, [2, 3, 4, 5, 6])
print("shared-noise beta=1, k=4:", {n: str(v) for n, v in values.items()}, "->", float(limit))
