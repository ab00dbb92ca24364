"""
Joint cumulants as oriented graphs
==================================

Each factor M_ij of a cumulant becomes an edge i -> j between index vertices.
"""
from dependent_wigner.graphs import (
    canonical_key,
    connected_components,
    enumerate_graphs,
    from_index_pattern,
    is_eulerian,
    scaling_exponent,
    symmetry_factor,
)

# <M_12 M_23 M_31 M_11>_c : a triangle with a loop on vertex 1
g, labels = from_index_pattern([(1, 2), (2, 3), (3, 1), (1, 1)])
print("edges", g.edges, "labels", labels)
print("eulerian", is_eulerian(g), "components", connected_components(g))
print("v - c - e/2 =", scaling_exponent(g))

# relabelling the indices does not change the key
h, _ = from_index_pattern([(7, 5), (5, 9), (9, 7), (7, 7)])
print("same key:", canonical_key(g) == canonical_key(h))

# a non-Eulerian example: M_12 together with M_33
g2, _ = from_index_pattern([(1, 2), (3, 3)])
print("M_12 M_33: eulerian", is_eulerian(g2), "components", connected_components(g2))

graphs = enumerate_graphs(max_vertices=4, max_edges=4)
eulerian = [x for x in graphs if is_eulerian(x)]
print(len(graphs), "graphs up to 4 vertices / 4 edges,", len(eulerian), "Eulerian")

for x in eulerian[:6]:
    print(" ", x.edges, "symmetry factor", symmetry_factor(x))
