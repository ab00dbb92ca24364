"""
Green function from the replica flow
====================================

The effective potential is iterated order by order in t = 1/z on graph
coefficients.  The loop coefficient gives the 1/z series of G(z).
"""
from fractions import Fraction

from dependent_wigner.cumulants import CumulantSpec, PerturbationTerm
from dependent_wigner.flow import LOOP, Truncation, green_series, run_flow, verify_bound_propagation
from dependent_wigner.graphs import OrientedMultigraph, canonical_key
from dependent_wigner.spectral import green_series_closed

state = run_flow(CumulantSpec(1), Truncation.for_green_series(9))
closed = green_series_closed(9)
for p, c in green_series(state, 9):
    print(f"1/z^{p}: flow {str(c):>3s}  closed form {closed[p - 1].real:+.12f}")

# exact in N: the t^3 loop coefficient is the finite-N fourth moment
print("t^3 loop coefficient:", state.coefficient(LOOP, 3))

# a dependent perturbation: a triangle (Eulerian) and a single edge (not)
triangle = OrientedMultigraph(3, ((0, 1), (1, 2), (2, 0)))
edge = OrientedMultigraph(2, ((0, 1),))
spec = CumulantSpec(1, (
    PerturbationTerm(canonical_key(triangle), Fraction(1, 2), 1),
    PerturbationTerm(canonical_key(edge), Fraction(1, 3), Fraction(1, 2)),
))
state = run_flow(spec, Truncation(4, 4, 4))
report = verify_bound_propagation(state)
pert = [e for e in report.ledger if e["sector"] == "perturbation"]
print(len(pert), "perturbation coefficients tracked; passed:", report.passed)
print("largest exponent on Eulerian graphs:", max(e["n_exponent"] for e in pert if e["eulerian"]))
print("joins by (eulerian A, eulerian B, eulerian joined):", dict(report.quadratic_events))
