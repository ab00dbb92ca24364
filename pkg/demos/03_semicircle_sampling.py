"""
Spectra of sampled matrices
===========================

GUE and a Wigner matrix with Rademacher entries both approach the semicircle.
"""
import math

from dependent_wigner.ensembles import GUE, Distribution, WignerIID, sample_batch
from dependent_wigner.spectral import (
    SemicircleLaw,
    histogram_table,
    ks_distance,
    moment_table,
    spectral_sample,
)

wigner = WignerIID(Distribution("uniform", math.sqrt(3)), Distribution("rademacher", math.sqrt(0.5)))

for name, ens in [("GUE", GUE(1.0)), ("Rademacher Wigner", wigner)]:
    for N in (64, 256):
        s = spectral_sample(sample_batch(ens, N, 20, seed=1), [2, 4, 6])
        ks = ks_distance(s, SemicircleLaw())
        moments = ", ".join(f"m{k}={est:.3f}+-{se:.3f}" for k, est, se, _, _ in moment_table(s))
        print(f"{name:18s} N={N:4d} KS={ks:.4f} {moments}")

# a coarse text histogram against the semicircle bin averages
s = spectral_sample(sample_batch(GUE(1.0), 256, 20, seed=2), [2])
for left, right, count, emp, ref in histogram_table(s, bins=16):
    print(f"{left:+.2f} {'#' * int(60 * emp):40s} {ref:.3f}")
