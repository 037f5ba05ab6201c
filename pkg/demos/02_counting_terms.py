"""Approximate against exact counting of a term #y phi(x, y).

The approximate weights never undercount and overcount by at most a
factor 1 + eps; the exact decomposition uses signed weights instead.
"""

from fractions import Fraction

import numpy as np

from sparsecount import approx_weights, count_term, exact_weights, parse_query
from sparsecount.generators import grid_with_vertices
from sparsecount.qe import functional_setup

g = grid_with_vertices(36, labels=("P",), rng=np.random.default_rng(1))
# neighbours of x that are not labelled P, and that are not x itself
phi = parse_query("E(x,y) & !P(y) & !(y = x)")

s, f = functional_setup(g, phi)
eps = Fraction(1, 4)
s_apx, types, apx = approx_weights(s, f, eps, "y", ("x",))
s_ex, _, ex = exact_weights(s, f, "y", ("x",))

tuples = np.arange(g.vertex_count).reshape(-1, 1)
approx_sums = apx.total(s_apx, tuples)
exact_sums = ex.total(s_ex, tuples)

print(f"{len(types)} type descriptors, weight table shape {apx.weights.shape}")
print(" x  oracle  exact  approx")
for x in range(0, g.vertex_count, 5):
    print(f"{x:2d}  {count_term('y', phi, g, {'x': x}):6d}  {exact_sums[x]:5d}  {approx_sums[x]:6d}")
ratio = max(a / max(e, 1) for a, e in zip(approx_sums.tolist(), exact_sums.tolist()))
print(f"largest approx/exact ratio: {ratio:.3f} (bound {1 + float(eps)})")
