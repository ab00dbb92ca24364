from fractions import Fraction

import numpy as np
import pytest

from dependent_wigner.cumulants import CumulantSpec, PerturbationTerm
from dependent_wigner.ensembles import GUE, CommonNoise, Distribution, cumulant_spec_of, sample_batch
from dependent_wigner.errors import BudgetExceeded, LimitExceeded, OddOrder
from dependent_wigner.graphs import OrientedMultigraph, canonical_key
from dependent_wigner.oracle import (
    asymptotic_trend,
    exact_trace_moment,
    extrapolate_to_zero,
    pairings,
    wick_pairing_moment,
)
from dependent_wigner.spectral import trace_moment

GUE_SPEC = CumulantSpec(1)


def test_single_entry_case():
    assert exact_trace_moment(CumulantSpec(Fraction(3)), 1, 2) == 9


def test_odd_moments_vanish():
    for N in (1, 2, 3):
        for k in (1, 3, 5):
            assert exact_trace_moment(GUE_SPEC, N, k) == 0


def test_fourth_moment_closed_form():
    for N in range(2, 7):
        assert exact_trace_moment(GUE_SPEC, N, 4) == 2 + Fraction(1, N**2)
    assert wick_pairing_moment(4, 2) == Fraction(9, 4)


@pytest.mark.parametrize("N", range(1, 7))
def test_two_oracles_agree(N):
    for k in (2, 4, 6):
        assert exact_trace_moment(GUE_SPEC, N, k) == wick_pairing_moment(k, N)


def test_cache_off_mode_agrees():
    spec = cumulant_spec_of(CommonNoise(1, beta=1), max_order=3)
    assert exact_trace_moment(spec, 3, 3, cache=False) == exact_trace_moment(spec, 3, 3)


def test_workers_agree():
    spec = cumulant_spec_of(CommonNoise(1, Distribution("exponential", 1), beta=1), max_order=3)
    assert exact_trace_moment(spec, 3, 3, workers=2) == exact_trace_moment(spec, 3, 3)


def test_pairing_count_and_noncrossing():
    assert sum(1 for _ in pairings(range(6))) == 15
    # large N limit of the k=6 pairing sum: 5 non-crossing pairings
    assert wick_pairing_moment(6, 10**6) == pytest.approx(5, abs=1e-10)


def test_guards():
    with pytest.raises(BudgetExceeded):
        exact_trace_moment(GUE_SPEC, 20, 8)
    with pytest.raises(OddOrder):
        wick_pairing_moment(3, 4)
    with pytest.raises(LimitExceeded):
        wick_pairing_moment(12, 2)


def test_extrapolation_is_exact_for_polynomials():
    hs = [Fraction(1, n) for n in (2, 3, 4, 5)]
    assert extrapolate_to_zero(hs, [7 + 3 * h - h**3 for h in hs]) == 7


def test_asymptotic_trend_examples():
    limit, values = asymptotic_trend(GUE_SPEC, 4, [2, 3, 4, 5, 6])
    assert abs(limit - 2) < 1e-6 and values[3] == Fraction(19, 9)
    limit6, _ = asymptotic_trend(GUE_SPEC, 6, [2, 3, 4, 5, 6])
    assert limit6 == 5


def test_common_noise_beta_one_has_gaussian_limits():
    spec = cumulant_spec_of(CommonNoise(1, beta=1), max_order=4)
    for k in (2, 4):
        limit, values = asymptotic_trend(spec, k, [2, 3, 4, 5, 6])
        assert abs(float(limit) - {2: 1, 4: 2}[k]) < 1e-3
        assert values[2] != exact_trace_moment(GUE_SPEC, 2, k)


@pytest.mark.parametrize("N", [4, 6])
@pytest.mark.parametrize("ens", [GUE(1.0), CommonNoise(1, beta=Fraction(1, 2))], ids=["gue", "noise"])
def test_sampler_matches_exact_moments(N, ens):
    spec = cumulant_spec_of(ens, max_order=4)
    mats = sample_batch(ens, N, 20000, seed=N)
    for k in (2, 4):
        mean, se = trace_moment(mats, k)
        assert abs(mean - float(exact_trace_moment(spec, N, k))) < 3 * se


def test_non_eulerian_perturbation_contribution_shrinks():
    # a single edge i -> j: v - c - e/2 = 1/2, amplitude scaled to stay bounded
    edge = OrientedMultigraph(2, ((0, 1),))
    spec = CumulantSpec(1, (PerturbationTerm(canonical_key(edge), 1, Fraction(1, 2)),))
    grid = [2, 4, 6, 8]
    shifts = [abs(float(exact_trace_moment(spec, N, 4) - exact_trace_moment(GUE_SPEC, N, 4))) for N in grid]
    assert all(s <= 6 / np.sqrt(N) for s, N in zip(shifts, grid))
    assert shifts[-1] < shifts[0]
