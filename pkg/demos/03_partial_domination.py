"""Partial dominating sets: which k vertices cover the most of the graph?"""

from sparsecount import partial_dominating_set
from sparsecount.generators import cycle, path, star

for name, g in [("star(6)", star(6)), ("path(8)", path(8)), ("cycle(9)", cycle(9))]:
    for k in (1, 2, 3):
        r = partial_dominating_set(g, k)
        print(f"{name:9s} k={k}: {r.value} of {g.vertex_count} dominated by {r.tuple}")

# decision form: can two vertices of the 9-cycle dominate more than 6 vertices?
print("cycle(9), k=2, > 6:", partial_dominating_set(cycle(9), 2, threshold=6))
