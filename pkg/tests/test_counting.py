import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import all_tuples, check_flip_postcondition, naive_pairs, random_formula, random_graph
from sparsecount.clauses import CanonicalClause, Mixed
from sparsecount.counting import (approx_decompose, approx_weights, count_pairs, exact_decompose,
                                  exact_weights, flip_violations, prepare_flips, technical_epsilon)
from sparsecount.errors import ContractError, ShapeError
from sparsecount.generators import complete, path, star
from sparsecount.graph import IDENTITY, FunctionalStructure, LabeledGraph, Signature, augment, orient
from sparsecount.logic import (TRUE, Count, Edge, Eq, Exists, Forall, Not, Pred, Var, conj, disj,
                               evaluate)
from sparsecount.normal import ConjClause
from sparsecount.optimizer import domination_body
from sparsecount.oracle import count_term
from sparsecount.qe import functional_setup

x, y = Var("x"), Var("y")


def _hand(n, tables, preds=None):
    names = tuple(tables)
    sig = Signature((IDENTITY, *names), tuple(preds or ()), {},
                    {IDENTITY: "original", **{f: "original" for f in names}})
    return FunctionalStructure(sig, n, {f: np.asarray(t) for f, t in tables.items()},
                               {p: np.asarray(m, dtype=bool) for p, m in (preds or {}).items()})


def _oracle_counts(g, phi, xs, tuples):
    return np.array([count_term("y", phi, g, dict(zip(xs, map(int, t)))) for t in tuples], dtype=np.int64)


# ---------------------------------------------------------------- count_pairs

def test_count_pairs_star():
    s = _hand(4, {"f": [0, 0, 0, 0]})
    triples = count_pairs(s, ConjClause(), "f", "f")
    assert list(triples) == [(0, 0, 4)]


def test_count_pairs_empty_tau():
    s = _hand(3, {"f": [0, 0, 1]}, {"P": [False, False, False]})
    assert len(count_pairs(s, ConjClause({Pred("P", y): True}), "f", "f")) == 0


def test_count_pairs_single_vertex():
    s = _hand(1, {})
    assert list(count_pairs(s, ConjClause(), IDENTITY, IDENTITY)) == [(0, 0, 1)]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(0, 10 ** 6))
def test_count_pairs_matches_naive(n, seed):
    rng = np.random.default_rng(seed)
    s = _hand(n, {"f": rng.integers(0, n, n), "g": rng.integers(0, n, n)}, {"P": rng.random(n) < 0.6})
    for tau in (ConjClause(), ConjClause({Pred("P", y): True}), ConjClause({Pred("P", y): False})):
        mask = np.ones(n, bool) if not len(tau) else (s.predicates["P"] == tau.value(Pred("P", y)))
        got = count_pairs(s, tau, "f", "g")
        assert got.as_dict() == naive_pairs(s, mask, "f", "g")
        assert list(zip(got.u.tolist(), got.u2.tolist())) == sorted(got.as_dict())


# ---------------------------------------------------------------- technical epsilon

def test_technical_epsilon_values():
    assert technical_epsilon(Fraction(1, 2), 2) == Fraction(1, 8)
    assert technical_epsilon(3, 1) == Fraction(1, 2)
    assert technical_epsilon(Fraction(1, 10), 0) == Fraction(1, 20)
    with pytest.raises(ContractError):
        technical_epsilon(0, 3)


# ---------------------------------------------------------------- prepare_flips

def _flip_clause(f="f", f2="f2"):
    return CanonicalClause("y", ("x",), ConjClause(), ConjClause(), (Mixed(f, IDENTITY, 0),),
                           (Mixed(f2, IDENTITY, 0),))


def _parents(common):
    # u = 0 and u2 = 1; twenty children of u, ``common`` of which also point at u2;
    # the fraternal arc 0 -> 1 is present as after augmentation
    n = 22
    f = np.arange(n)
    f2 = np.arange(n)
    g = np.arange(n)
    f[2:] = 0
    f2[2:2 + common] = 1
    g[1] = 0
    return _hand(n, {"f": f, "f2": f2, "g": g})


def test_prepare_flips_heavy_pair():
    c = _flip_clause()
    s = prepare_flips(_parents(5), [c], Fraction(1, 10))
    assert (1, 0) in s.arcs()


def test_prepare_flips_light_pair():
    c = _flip_clause()
    s0 = _parents(2)
    # 2 common children against 0.1 * 21 = 2.1
    assert prepare_flips(s0, [c], Fraction(1, 10)) is s0


def test_prepare_flips_threshold_unreachable():
    s0 = _parents(20)
    assert prepare_flips(s0, [_flip_clause()], 1) is s0


def test_prepare_flips_zero_counts():
    s0 = _hand(3, {"f": [0, 1, 2], "f2": [0, 1, 2]})
    assert prepare_flips(s0, [_flip_clause()], Fraction(1, 3)) is s0


def test_prepare_flips_rejects_nonpositive():
    with pytest.raises(ContractError):
        prepare_flips(_parents(3), [_flip_clause()], 0)


def test_prepare_flips_postcondition_random():
    rng = random.Random(7)
    for _ in range(30):
        n = rng.randint(2, 10)
        base = orient(random_graph(rng, n))
        s = augment(base)
        syms = [f for f in base.signature.function_symbols if f != IDENTITY] or [IDENTITY]
        clauses = [_flip_clause(rng.choice(syms), rng.choice(syms)) for _ in range(3)]
        eps1 = Fraction(1, rng.randint(2, 8))
        t = prepare_flips(s, clauses, eps1)
        check_flip_postcondition(s, t, clauses, eps1)
        assert not flip_violations(t, clauses, eps1)


# ---------------------------------------------------------------- approximate decomposition

def _setup(g, phi):
    return functional_setup(g, phi)


def test_approx_k3_sandwich():
    s, phi = _setup(complete(3), Edge(x, y))
    s2, total = approx_decompose(s, phi, Fraction(1, 2), "y", ("x",))
    sums = total.evaluate(s2, np.arange(3).reshape(-1, 1))
    assert ((2 <= sums) & (sums <= 3)).all()


def test_approx_without_negative_mixed_literals_is_exact():
    g = path(5)
    s, phi = _setup(g, Eq(y, x))
    s2, total = approx_decompose(s, phi, Fraction(1, 10), "y", ("x",))
    assert (total.evaluate(s2, np.arange(5).reshape(-1, 1)) == 1).all()


def test_approx_weights_k3():
    s, phi = _setup(complete(3), Edge(x, y))
    s2, types, table = approx_weights(s, phi, Fraction(1, 2), "y", ("x",))
    sums = table.total(s2, np.arange(3).reshape(-1, 1))
    assert ((2 <= sums) & (sums <= 3)).all()
    assert (table.weights >= 0).all()


def test_approx_weights_unsatisfiable():
    s, phi = _setup(path(4), conj([Pred("P", y), Not(Pred("P", y)), Edge(x, y)]))
    s2, types, table = approx_weights(s, phi, 1, "y", ("x",))
    assert len(types) == 1 and types.vectors == [()]
    assert not table.weights.any()


def test_approx_rejects_quantifiers():
    s, _ = _setup(path(3), TRUE)
    with pytest.raises(ShapeError):
        approx_decompose(s, Exists("z", Eq(Var("z"), y)), 1, "y", ("x",))


def check_sandwich(g, phi, xs, eps):
    s, f = _setup(g, phi)
    s2, types, table = approx_weights(s, f, eps, "y", xs)
    tuples = all_tuples(g.vertex_count, len(xs))
    truth = _oracle_counts(g, phi, xs, tuples)
    sums = table.total(s2, tuples)
    eps = Fraction(eps)
    for t, c in zip(truth.tolist(), sums.tolist()):
        assert t <= c <= (1 + eps) * t, (t, c)
    assert (table.weights >= 0).all()


def _random_body(rng, xs, n, atoms=3):
    return random_formula(rng, ["y", *xs], 0, [0, atoms - 1], n, allow_counts=False)


def test_sandwich_random():
    rng = random.Random(8)
    for _ in range(40):
        n = rng.randint(1, 7)
        g = random_graph(rng, n)
        xs = ("x1",) if rng.random() < 0.6 else ("x1", "x2")
        check_sandwich(g, _random_body(rng, xs, n), xs, rng.choice([Fraction(1, 10), Fraction(1, 2), 1]))


def test_weight_csv():
    s, phi = _setup(complete(3), Edge(x, y))
    _, _, table = approx_weights(s, phi, 1, "y", ("x",))
    lines = table.to_csv().splitlines()
    assert lines[0] == "vertex,descriptor,position,weight"
    assert len(lines) == 1 + table.weights.size


# ---------------------------------------------------------------- exact decomposition

def test_exact_single_edge():
    g = LabeledGraph(3, frozenset({(0, 1)}))
    s, phi = _setup(g, Edge(x, y))
    s2, total = exact_decompose(s, phi, "y", ("x",))
    assert total.evaluate(s2, np.array([[0], [1], [2]])).tolist() == [1, 1, 0]


def test_exact_complement_count():
    s, phi = _setup(LabeledGraph(4), Not(Eq(y, x)))
    s2, total = exact_decompose(s, phi, "y", ("x",))
    assert (total.evaluate(s2, np.arange(4).reshape(-1, 1)) == 3).all()


def test_exact_top():
    s, _ = _setup(path(5), TRUE)
    s2, types, table = exact_weights(s, TRUE, "y", ("x",))
    assert (table.total(s2, np.arange(5).reshape(-1, 1)) == 5).all()


def test_exact_star_domination():
    g = star(4)
    body, xs = domination_body(1)
    s, f = _setup(g, body)
    s2, types, table = exact_weights(s, f, "y", xs)
    sums = table.total(s2, np.arange(5).reshape(-1, 1)).tolist()
    center = max(range(5), key=lambda v: len(g.neighbors()[v]))
    assert sums[center] == 5
    assert all(sums[v] == 2 for v in range(5) if v != center)


def test_exact_rejects_counting_atoms():
    s, phi = _setup(path(3), Count("z", Edge(Var("z"), y), ">", 0))
    with pytest.raises(ShapeError):
        exact_decompose(s, phi, "y", ("x",))


def check_exact(g, phi, xs):
    s, f = _setup(g, phi)
    s2, types, table = exact_weights(s, f, "y", xs)
    tuples = all_tuples(g.vertex_count, len(xs))
    truth = _oracle_counts(g, phi, xs, tuples)
    assert (table.total(s2, tuples) == truth).all()
    _, total = exact_decompose(s, f, "y", xs)
    assert np.abs(table.weights).max(initial=0) <= g.vertex_count * max(len(total.entries), 1)


def _with_quantifier(rng, xs, n):
    inner = random_formula(rng, ["y", *xs, "z"], 0, [0, 1], n, allow_counts=False)
    q = Exists("z", inner) if rng.random() < 0.5 else Forall("z", inner)
    rest = _random_body(rng, xs, n, 2)
    return rng.choice([conj, disj])([q, rest])


def test_exact_random():
    rng = random.Random(9)
    for _ in range(40):
        n = rng.randint(1, 7)
        g = random_graph(rng, n)
        xs = ("x1",) if rng.random() < 0.6 else ("x1", "x2")
        phi = _with_quantifier(rng, xs, n) if rng.random() < 0.5 else _random_body(rng, xs, n)
        check_exact(g, phi, xs)
