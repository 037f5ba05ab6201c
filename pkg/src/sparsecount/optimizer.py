"""Exact optimisation of counting terms ``#y phi(y, xs)`` over tuples ``xs``.

The count is decomposed into exact per-vertex weights (one table per
sign-vector type of ``xs``), so the value of a tuple is a sum of one weight
per position.  A branch-and-bound search per type then looks for the best
tuple; ties go to the lexicographically smallest one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .counting import exact_weights
from .errors import ContractError, ShapeError
from .graph import LabeledGraph
from .logic import (And, Bottom, Edge, Eq, Formula, Not, Or, Pred, Top, Var, counting_atoms,
                    disj, eval_term, free_vars)
from .qe import functional_setup

logger = logging.getLogger(__name__)


@dataclass
class OptResult:
    tuple: tuple
    value: int
    mode: str
    explored: int

    def record(self) -> dict:
        return {"tuple": list(self.tuple), "value": self.value, "mode": self.mode,
                "explored": self.explored}


def _partial(f: Formula, s, a: dict):
    """Kleene three-valued truth of a quantifier-free ``f`` under a partial assignment."""
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, (Pred, Eq)):
        terms = (f.term,) if isinstance(f, Pred) else (f.left, f.right)
        vals = []
        for t in terms:
            base = t
            while not isinstance(base, Var):
                base = base.arg
            if base.name not in a:
                return None
            vals.append(int(eval_term(t, s, {base.name: np.int64(a[base.name])})))
        if isinstance(f, Pred):
            return bool(s.predicates[f.name][vals[0]])
        return vals[0] == vals[1]
    if isinstance(f, Not):
        v = _partial(f.arg, s, a)
        return None if v is None else not v
    if isinstance(f, (And, Or)):
        want = isinstance(f, Or)
        unknown = False
        for g in f.args:
            v = _partial(g, s, a)
            if v is None:
                unknown = True
            elif v == want:
                return want
        return None if unknown else not want
    raise ShapeError(f"unexpected formula in type condition: {f}")


def _search(s, weights: np.ndarray, cond: Formula, xs: Sequence[str], maximize: bool,
            prune: bool, best):
    """Branch and bound for one type; ``best`` is ``[value, tuple]`` shared across types."""
    k, n = weights.shape
    w = weights if maximize else -weights
    orders = [sorted(range(n), key=lambda v, j=j: (-w[j, v], v)) for j in range(k)]
    tail = np.zeros(k + 1, dtype=np.int64)
    for j in range(k - 1, -1, -1):
        tail[j] = tail[j + 1] + (w[j].max() if n else 0)
    explored = 0
    prefix: list[int] = []
    assign: dict = {}

    def rec(j: int, acc: int):
        nonlocal explored
        explored += 1
        if prune and best[0] is not None:
            bound = acc + int(tail[j])
            if bound < best[0]:
                return
            if bound == best[0] and tuple(prefix) > best[1][:j]:
                return
        verdict = _partial(cond, s, assign)
        if verdict is False:
            return
        if j == k:
            if verdict is None:
                raise ContractError("type condition undecided on a full tuple")
            value = acc
            if best[0] is None or value > best[0] or (value == best[0] and tuple(prefix) < best[1]):
                best[0], best[1] = value, tuple(prefix)
            return
        for v in orders[j]:
            prefix.append(v)
            assign[xs[j]] = v
            rec(j + 1, acc + int(w[j, v]))
            prefix.pop()
            del assign[xs[j]]

    rec(0, 0)
    return explored


def optimize(g: LabeledGraph, phi: Formula, mode: str = "max", y: str = "y",
             xs: Sequence[str] | None = None, prune: bool = True) -> OptResult:
    """Tuple ``xs`` optimising ``#y phi``; ``mode`` is ``"max"`` or ``"min"``."""
    if mode not in ("max", "min"):
        raise ValueError("mode must be 'max' or 'min'")
    if counting_atoms(phi):
        raise ShapeError("optimisation bodies must not contain counting atoms")
    xs = tuple(sorted(free_vars(phi) - {y})) if xs is None else tuple(xs)
    extra = free_vars(phi) - {y} - set(xs)
    if extra:
        raise ShapeError(f"free variables {sorted(extra)} are neither counted nor optimised")
    n = g.vertex_count
    if n == 0:
        if xs:
            raise ContractError("no tuples over an empty graph")
        return OptResult((), 0, mode, 1)
    s, f = functional_setup(g, phi)
    search_xs = xs or ("u0",)
    s, types, table = exact_weights(s, f, y, search_xs)
    conds = types.conditions()
    maximize = mode == "max"
    best = [None, None]
    explored = 0
    for d in range(len(types)):
        explored += _search(s, table.weights[d], conds[d], search_xs, maximize, prune, best)
    value = best[0] if maximize else -best[0]
    tup = best[1] if xs else ()
    return OptResult(tuple(int(v) for v in tup), int(value), mode, explored)


def domination_body(k: int, y: str = "y") -> tuple[Formula, tuple]:
    """``OR_i (x_i = y or E(x_i, y))`` and its variables ``x1..xk``."""
    xs = tuple(f"x{i + 1}" for i in range(k))
    parts = []
    for x in xs:
        parts.append(Eq(Var(x), Var(y)))
        parts.append(Edge(Var(x), Var(y)))
    return disj(parts), xs


def partial_dominating_set(g: LabeledGraph, k: int, threshold: int | None = None):
    """Best ``k`` vertices by number of dominated vertices.

    Without ``threshold`` returns the :class:`OptResult` of maximum coverage;
    with it, whether some ``k`` vertices dominate more than ``threshold``.
    """
    if k < 1:
        raise ContractError("k must be positive")
    if k > g.vertex_count:
        raise ContractError(f"k = {k} exceeds the number of vertices {g.vertex_count}")
    body, xs = domination_body(k)
    result = optimize(g, body, "max", "y", xs)
    if threshold is None:
        return result
    return result.value > threshold
