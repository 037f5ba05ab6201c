import itertools
import random

import pytest

from helpers import random_formula, random_graph
from sparsecount.errors import ContractError, ShapeError
from sparsecount.generators import complete, cycle, path, star
from sparsecount.graph import LabeledGraph
from sparsecount.logic import TRUE, Count, Edge, Exists, Forall, Var, conj, disj
from sparsecount.optimizer import domination_body, optimize, partial_dominating_set
from sparsecount.oracle import count_term

x, y = Var("x"), Var("y")


def brute_force(g, phi, xs, mode):
    """Best value and the lexicographically smallest tuple reaching it."""
    best = None
    for t in itertools.product(range(g.vertex_count), repeat=len(xs)):
        c = count_term("y", phi, g, dict(zip(xs, t)))
        better = best is None or (c > best[0] if mode == "max" else c < best[0])
        if better:
            best = (c, t)
    return best


def check_optimum(g, phi, xs, mode, prune=True):
    r = optimize(g, phi, mode, "y", xs, prune=prune)
    value, tup = brute_force(g, phi, xs, mode)
    assert r.value == value
    assert r.tuple == tup
    assert count_term("y", phi, g, dict(zip(xs, r.tuple))) == r.value
    return r


def test_path_domination():
    body, xs = domination_body(1)
    r = optimize(path(4), body, "max", "y", xs)
    assert r.value == 3 and r.tuple in ((1,), (2,))


def test_top_any_mode():
    for mode in ("max", "min"):
        assert optimize(path(5), TRUE, mode, "y", ("x",)).value == 5


def test_min_isolated_vertex():
    g = LabeledGraph(4, frozenset({(0, 1), (1, 2)}))
    r = optimize(g, Edge(x, y), "min", "y", ("x",))
    assert r.tuple == (3,) and r.value == 0


def test_rejects_counting_body():
    with pytest.raises(ShapeError):
        optimize(path(3), Count("z", Edge(Var("z"), y), ">", 0), "max", "y", ("x",))


def test_bad_mode():
    with pytest.raises(ValueError):
        optimize(path(3), TRUE, "median", "y", ("x",))


def test_pds_star():
    g = star(4)
    r = partial_dominating_set(g, 1)
    center = max(range(5), key=lambda v: len(g.neighbors()[v]))
    assert r.tuple == (center,) and r.value == 5
    assert r.record() == {"tuple": [center], "value": 5, "mode": "max", "explored": r.explored}


def test_pds_triangle_threshold():
    assert partial_dominating_set(complete(3), 2, threshold=2) is True
    assert partial_dominating_set(complete(3), 2, threshold=3) is False


def test_pds_edgeless():
    assert partial_dominating_set(LabeledGraph(3), 1).value == 1


def test_pds_errors():
    with pytest.raises(ContractError):
        partial_dominating_set(path(2), 3)
    with pytest.raises(ContractError):
        partial_dominating_set(path(2), 0)


def test_pds_families_brute_force():
    for make in (star, path, cycle):
        for n in range(3, 8):
            g = make(n)
            for k in (1, 2, 3):
                if k > g.vertex_count:
                    continue
                body, xs = domination_body(k)
                r = partial_dominating_set(g, k)
                value, tup = brute_force(g, body, xs, "max")
                assert (r.value, r.tuple) == (value, tup)


def _random_body(rng, xs, n):
    base = random_formula(rng, ["y", *xs], 0, [0, 3], n, allow_counts=False)
    if rng.random() < 0.3:
        inner = random_formula(rng, ["y", *xs, "z"], 0, [0, 1], n, allow_counts=False)
        q = Exists("z", inner) if rng.random() < 0.5 else Forall("z", inner)
        base = rng.choice([conj, disj])([base, q])
    return base


def test_optimize_random_brute_force():
    rng = random.Random(21)
    for _ in range(40):
        n = rng.randint(1, 7)
        g = random_graph(rng, n)
        k = rng.randint(1, 3)
        xs = tuple(f"x{i + 1}" for i in range(k))
        phi = _random_body(rng, xs, n)
        mode = rng.choice(["max", "min"])
        r1 = check_optimum(g, phi, xs, mode)
        r2 = check_optimum(g, phi, xs, mode, prune=False)
        assert r1.value == r2.value and r1.explored <= r2.explored
