"""
An invariant quartic potential
==============================

Matrices drawn from exp(-Tr V(M)) with V = M^2/2 + g N^-1 M^4/4 have
dependent entries whose cumulants do not decay fast enough: the fourth moment
stays far from the semicircle value 2.
"""
from dependent_wigner.ensembles import InvariantPotential, MetropolisChain
from dependent_wigner.spectral import spectral_sample

N = 32
for g in (0.0, 0.5, 1.0):
    chain = MetropolisChain(InvariantPotential(((4, g),), steps=10, burn_in=80), N, seed=3)
    mats = [chain.sample() for _ in range(30)]
    m = spectral_sample(mats, [2, 4]).trace_moments
    print(f"g4={g}: m2={m[2][0]:.3f} m4={m[4][0]:.3f}+-{m[4][1]:.3f}"
          f"  acceptance {chain.acceptance_rate:.2f} step {chain.step:.3f}")
