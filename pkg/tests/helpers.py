"""Random instances shared by the test modules."""

from __future__ import annotations

import itertools
import random

import numpy as np

from sparsecount.graph import LabeledGraph, orient
from sparsecount.logic import (And, Count, Edge, Eq, Exists, Forall, Not, Or, Pred, Var,
                               counting_atoms, evaluate, free_vars, rename_apart)

LABELS = ("P", "Q")


def random_graph(rng: random.Random, n: int, p: float | None = None, labels=LABELS) -> LabeledGraph:
    p = rng.choice([0.2, 0.35, 0.5, 0.7]) if p is None else p
    edges = {(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p}
    lab = {name: frozenset(v for v in range(n) if rng.random() < 0.4) for name in labels}
    return LabeledGraph(n, frozenset(edges), lab)


def random_atom(rng: random.Random, scope: list[str]):
    kind = rng.choice(["P", "Q", "E", "E", "eq"])
    if kind in ("P", "Q"):
        return Pred(kind, Var(rng.choice(scope)))
    a, b = rng.choice(scope), rng.choice(scope)
    if kind == "eq":
        return Eq(Var(a), Var(b))
    if a == b and len(scope) > 1:
        b = rng.choice([v for v in scope if v != a])
    return Edge(Var(a), Var(b))


def random_formula(rng: random.Random, scope: list[str], depth: int, counts: list[int], n: int,
                   allow_counts: bool = True, fresh=None):
    """Random formula over ``scope``.

    ``counts`` is ``[counting atoms left, connectives left]``; both budgets are
    shared across the whole formula.
    """
    fresh = fresh if fresh is not None else itertools.count()
    options = ["atom", "atom", "not", "and", "or"] if counts[1] > 0 else ["atom"]
    if depth > 0:
        options += ["exists", "forall"]
        if allow_counts and counts[0] > 0:
            options += ["count", "count"]
    if not scope:
        options = [o for o in options if o in ("exists", "forall", "count")] or ["atom"]
    if depth > 0 and options == ["atom"]:
        options += ["exists", "forall"]
    kind = rng.choice(options)
    if kind == "atom":
        return random_atom(rng, scope)
    if kind in ("not", "and", "or"):
        counts[1] -= 1
    if kind == "not":
        return Not(random_formula(rng, scope, depth, counts, n, allow_counts, fresh))
    if kind in ("and", "or"):
        a = random_formula(rng, scope, depth, counts, n, allow_counts, fresh)
        b = random_formula(rng, scope, depth, counts, n, allow_counts, fresh)
        return And((a, b)) if kind == "and" else Or((a, b))
    v = f"v{next(fresh)}"
    if kind == "count":
        counts[0] -= 1
    body = random_formula(rng, scope + [v], depth - 1, counts, n, allow_counts, fresh)
    if kind == "exists":
        return Exists(v, body)
    if kind == "forall":
        return Forall(v, body)
    cmp = rng.choice([">", ">", "<="])
    return Count(v, body, cmp, rng.randint(-1, n + 1))


def random_sentence(rng: random.Random, n: int, max_counts: int = 2, depth: int = 3,
                    allow_counts: bool = True, connectives: int = 8):
    """Random sentence with at most ``max_counts`` counting atoms."""
    counts = [max_counts if allow_counts else 0, connectives]
    fresh = itertools.count()
    v = f"v{next(fresh)}"
    tops = ["exists", "forall"] + (["count", "count"] if counts[0] > 0 else [])
    top = rng.choice(tops)
    if top == "count":
        counts[0] -= 1
    body = random_formula(rng, [v], depth - 1, counts, n, allow_counts, fresh)
    if top == "exists":
        f = Exists(v, body)
    elif top == "forall":
        f = Forall(v, body)
    else:
        f = Count(v, body, rng.choice([">", "<="]), rng.randint(-1, n + 1))
    assert not free_vars(f)
    assert len(counting_atoms(f)) <= max_counts
    return rename_apart(f)


def random_structure(rng: random.Random, n: int):
    """Oriented random labeled graph (a functional structure)."""
    return orient(random_graph(rng, n))


def all_tuples(n: int, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(n), repeat=k)), dtype=np.int64).reshape(-1, k)


def naive_pairs(s, tau_mask, f: str, f2: str) -> dict:
    """``(u, u2) -> |{v : tau(v), f(v) = u, f2(v) = u2}|`` by a plain loop over vertices."""
    out = {}
    for v in range(s.universe_size):
        if tau_mask[v]:
            key = (int(s.fn_tables[f][v]), int(s.fn_tables[f2][v]))
            out[key] = out.get(key, 0) + 1
    return out


def check_augmentation_laws(s, t) -> None:
    """Brute-force check that ``t`` is a transitive-fraternal augmentation of ``s``."""
    old = s.arcs()
    new = t.arcs()
    assert old <= new
    heads = {}
    for u, v in old:
        heads.setdefault(v, set()).add(u)
    transitive = {(u, w) for (u, v) in old for (v2, w) in old if v == v2 and u != w}
    fraternal = set()
    for w, us in heads.items():
        for a in us:
            for b in us:
                if a != b:
                    fraternal.add((a, b))
    for u, w in transitive:
        assert (u, w) in new, f"missing transitive arc {u}->{w}"
    for a, b in fraternal:
        assert (a, b) in new or (b, a) in new, f"fraternal pair {a},{b} unconnected"
    for arc in new - old:
        assert arc in transitive or arc in fraternal, f"untight arc {arc}"
    for (f, g), h in t.signature.composite_index.items():
        assert (t.fn_tables[h] == t.fn_tables[g][t.fn_tables[f]]).all()
    for f in s.signature.function_symbols:
        assert (t.fn_tables[f] == s.fn_tables[f]).all()
    for p in s.signature.predicate_symbols:
        assert (t.predicates[p] == s.predicates[p]).all()


def check_flip_postcondition(s, t, clauses, eps1):
    """Brute-force re-check on ``t``: every heavy pair of every combination has its arc.

    ``s`` is the structure before flipping; it bounds the new in-neighbours.
    """
    arcs = t.arcs()
    n = t.universe_size
    combos = {(c.tau, c.delta_eq[0].f, b.f) for c in clauses for b in c.delta_neq}
    for tau, f, f2 in combos:
        env = {"y": np.arange(n)}
        mask = np.broadcast_to(evaluate(tau.formula(), t, env), (n,))
        pairs = naive_pairs(t, mask, f, f2)
        single = {}
        for (u, _), c in pairs.items():
            single[u] = single.get(u, 0) + c
        for (u, u2), c in pairs.items():
            if u != u2 and c > eps1 * single[u]:
                assert (u2, u) in arcs, f"heavy pair {(u, u2)} without arc"
    new = arcs - s.arcs()
    into = {}
    for a, b in new:
        into[b] = into.get(b, 0) + 1
    bound = len(combos) * int(1 / eps1)
    assert all(v <= bound for v in into.values())
