"""Brute-force semantics used as ground truth in tests.

Evaluation is plain structural recursion over single assignments, written
independently of the vectorised evaluator in :mod:`sparsecount.logic`.  It is
exponential in the quantifier depth and meant for graphs of a few vertices.
"""

from __future__ import annotations

import itertools
import logging
from fractions import Fraction
from typing import Mapping

from .errors import BudgetExceeded, ShapeError
from .graph import FunctionalStructure, LabeledGraph
from .logic import (And, App, Bottom, Count, Edge, Eq, Exists, Forall, Formula, Implies, Not, Or,
                    Pred, Top, Var, counting_atoms, free_vars, replace_thresholds, similar_range)

logger = logging.getLogger(__name__)


def _term(t, s, a: Mapping[str, int]) -> int:
    if isinstance(t, Var):
        if t.name not in a:
            raise ShapeError(f"unbound variable {t.name!r}")
        return a[t.name]
    if isinstance(s, LabeledGraph):
        raise ShapeError("function terms need a functional structure")
    return int(s.fn_tables[t.fn][_term(t.arg, s, a)])


def _size(s) -> int:
    return s.vertex_count if isinstance(s, LabeledGraph) else s.universe_size


def _compare(count: int, cmp: str, n: int) -> bool:
    if cmp == ">":
        return count > n
    if cmp == "<=":
        return count <= n
    if cmp == ">=":
        return count >= n
    return count < n


def evaluate_formula(f: Formula, s, a: Mapping[str, int]) -> bool:
    """Truth of ``f`` on a labeled graph or functional structure under assignment ``a``."""
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Pred):
        v = _term(f.term, s, a)
        if isinstance(s, LabeledGraph):
            members = s.labels.get(f.name)
            return members is not None and v in members
        mask = s.predicates.get(f.name)
        return bool(mask[v]) if mask is not None else False
    if isinstance(f, Eq):
        return _term(f.left, s, a) == _term(f.right, s, a)
    if isinstance(f, Edge):
        if not isinstance(s, LabeledGraph):
            raise ShapeError("edge atoms are evaluated on labeled graphs only")
        return s.has_edge(_term(f.left, s, a), _term(f.right, s, a))
    if isinstance(f, Not):
        return not evaluate_formula(f.arg, s, a)
    if isinstance(f, And):
        return all(evaluate_formula(g, s, a) for g in f.args)
    if isinstance(f, Or):
        return any(evaluate_formula(g, s, a) for g in f.args)
    if isinstance(f, Implies):
        return (not evaluate_formula(f.left, s, a)) or evaluate_formula(f.right, s, a)
    if isinstance(f, Exists):
        return any(evaluate_formula(f.body, s, {**a, f.var: v}) for v in range(_size(s)))
    if isinstance(f, Forall):
        return all(evaluate_formula(f.body, s, {**a, f.var: v}) for v in range(_size(s)))
    if isinstance(f, Count):
        return _compare(count_term(f.var, f.body, s, a), f.cmp, f.threshold)
    raise TypeError(f"not a formula: {f!r}")


def count_term(y: str, body: Formula, s, a: Mapping[str, int]) -> int:
    """Number of vertices ``v`` with ``body`` true under ``a[y := v]``."""
    return sum(1 for v in range(_size(s)) if evaluate_formula(body, s, {**a, y: v}))


def instability_witness(f: Formula, s, lam, cap: int = 100_000):
    """A satisfied and an unsatisfied ``lam``-similar variant of sentence ``f``, or None.

    Every combination of integer thresholds inside the similarity intervals
    is tried, so ``None`` proves ``lam``-stability.  Only counting atoms that
    occur in ``f`` are perturbed.
    """
    lam = Fraction(lam)
    if lam <= 1:
        raise ValueError("lambda must exceed 1")
    if free_vars(f):
        raise ShapeError("instability is defined for sentences")
    ranges = [range(lo, hi + 1) for lo, hi in
              (similar_range(c.threshold, lam) for c in counting_atoms(f))]
    total = 1
    for r in ranges:
        total *= len(r)
    if total > cap:
        raise BudgetExceeded(f"perturbation grid of {total} points exceeds budget {cap}")
    sat = unsat = None
    for ts in itertools.product(*ranges):
        g = replace_thresholds(f, list(ts))
        if evaluate_formula(g, s, {}):
            sat = g if sat is None else sat
        else:
            unsat = g if unsat is None else unsat
        if sat is not None and unsat is not None:
            return sat, unsat
    return None


def all_tuples(n: int, k: int):
    return itertools.product(range(n), repeat=k)
