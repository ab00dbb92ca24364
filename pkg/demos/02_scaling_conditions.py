"""
Checking the cumulant scaling conditions
========================================

A GUE matrix plus s / N**beta on every entry, with one scalar s shared by all
entries, has cumulant kappa_e(s) N**(-e beta) on every graph with e edges.
Lowering beta makes the 4-cycle violate the Eulerian condition.
"""
from fractions import Fraction

from dependent_wigner.cumulants import theorem_condition_report
from dependent_wigner.ensembles import CommonNoise, cumulant_spec_of
from dependent_wigner.graphs import OrientedMultigraph, enumerate_graphs

graphs = enumerate_graphs(4, 4)
grid = [8, 16, 32, 64, 128, 256]
four_cycle = OrientedMultigraph(4, ((0, 1), (1, 2), (2, 3), (3, 0)))

for beta in (Fraction(3, 4), Fraction(1, 2), Fraction(1, 10)):
    spec = cumulant_spec_of(CommonNoise(1, beta=beta))
    report = theorem_condition_report(spec, graphs, grid)
    rec = report.record_for(four_cycle)
    print(f"beta={beta}: {len(report.failures())} failing graphs;"
          f" 4-cycle slope {rec.slope:+.3f} -> {rec.verdict}")

# slope for the 4-cycle is v - c - e/2 - 4 beta = 1 - 4 beta
