"""Quantifier elimination with certified over- and under-approximations.

Each counting atom ``#y phi > N`` is replaced by a quantifier-free formula
over new unary predicates that bucket the per-vertex weights of the
decomposed count.  Keeping an over- and an under-approximation of every
subformula yields the three-valued answer of :func:`check_sentence`.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .counting import WeightTable, approx_weights
from .errors import ContractError, ShapeError
from .graph import FunctionalStructure, LabeledGraph, orient
from .logic import (FALSE, TRUE, And, Bottom, Count, Exists, Forall, Formula, Implies, Not, Or,
                    Pred, Top, Var, all_vars, conj, disj, evaluate, free_vars, is_atom, ite, neg,
                    predicate_names, similar_range, strict_form, to_text)
from .normal import relational_to_functional

logger = logging.getLogger(__name__)


@dataclass
class BucketPredicates:
    step: Fraction
    l_max: int
    levels: dict = field(default_factory=dict)   # (d, j) -> [names of R^0..R^l_max]
    overflow: dict = field(default_factory=dict)  # (d, j) -> name of R^max
    at_least: dict = field(default_factory=dict)  # (d, j, m) -> name of "level >= m"


@dataclass
class ApproxPair:
    structure: FunctionalStructure
    phi_plus: Formula
    phi_minus: Formula
    epsilon: Fraction
    log: list = field(default_factory=list)


def _ceil(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def _floor(q: Fraction) -> int:
    return q.numerator // q.denominator


def _literal(name: str, mask: np.ndarray, var: str) -> Formula:
    if mask.all():
        return TRUE
    if not mask.any():
        return FALSE
    return Pred(name, Var(var))


def _tag(s: FunctionalStructure) -> str:
    taken = set(s.signature.predicate_symbols)
    i = 1
    while any(p.startswith(f"b{i}_") for p in taken):
        i += 1
    return f"b{i}_"


def bucketize(s: FunctionalStructure, table: WeightTable, N: int, eps) -> tuple[FunctionalStructure, Formula]:
    """Quantifier-free test for ``sum of weights > N`` up to a factor ``1 + eps``.

    The weights must bracket the count within ``1 + eps/2``.  The result
    ``phi`` satisfies: ``phi`` true implies count > N, and ``phi`` false implies
    count <= (1 + eps) N.  For ``N = 0`` the test is exact positivity.
    """
    s2, f, _ = bucketize_detail(s, table, N, eps)
    return s2, f


def bucketize_detail(s: FunctionalStructure, table: WeightTable, N: int, eps):
    eps = Fraction(eps)
    n = s.universe_size
    if N < 0:
        return s, TRUE, None
    if N >= n:
        return s, FALSE, None
    if table.mode != "exact" and (table.weights < 0).any():
        raise ContractError("bucketing needs nonnegative weights")
    xs = table.xs
    k = len(xs)
    D = len(table.descriptors)
    tag = _tag(s)
    preds: dict[str, np.ndarray] = {}
    leaves = []
    if N == 0:
        for d in range(D):
            parts = []
            for j in range(k):
                name = f"{tag}pos_{d}_{j}"
                mask = table.weights[d, j] > 0
                preds[name] = mask
                parts.append(_literal(name, mask, xs[j]))
            leaves.append(disj(parts))
        s = s.with_predicates(preds)
        return s, table.descriptors.tree.formula(leaves), None

    step = Fraction(N) * eps / (2 * k)
    q = (1 + eps / 2) * N / step
    l_max = _ceil(q)
    need = _floor(q) + 1  # sum of levels must reach this
    info = BucketPredicates(step, l_max)
    for d in range(D):
        levels_dj = []
        for j in range(k):
            w = table.weights[d, j]
            if w.size and int(w.max()) * step.denominator > (1 << 62):
                level = np.array([(int(c) * step.denominator) // step.numerator for c in w], dtype=object)
                level = np.minimum(level, l_max + 1).astype(np.int64)
            else:
                level = (w * step.denominator) // step.numerator
            names = []
            for lv in range(l_max + 1):
                name = f"{tag}R{lv}_{d}_{j}"
                preds[name] = level == lv
                names.append(name)
            name = f"{tag}Rmax_{d}_{j}"
            preds[name] = level > l_max
            info.levels[(d, j)] = names
            info.overflow[(d, j)] = name
            for m in range(1, need + 1):
                name = f"{tag}G{m}_{d}_{j}"
                preds[name] = level >= m
                info.at_least[(d, j, m)] = name
            levels_dj.append(level)

        memo = {}

        def reach(j: int, m: int, d=d) -> Formula:
            if m <= 0:
                return TRUE
            key = (j, m)
            if key in memo:
                return memo[key]
            g = info.at_least[(d, j, m)]
            at_least = _literal(g, preds[g], xs[j])
            if j == k - 1:
                out = at_least
            else:
                out = FALSE
                for lv in range(m - 1, -1, -1):
                    r = info.levels[(d, j)][lv]
                    out = ite(_literal(r, preds[r], xs[j]), reach(j + 1, m - lv), out)
                out = ite(at_least, TRUE, out)
            memo[key] = out
            return out

        leaves.append(reach(0, need))
    s = s.with_predicates(preds)
    return s, table.descriptors.tree.formula(leaves), info


def _free_tuple(phis: Sequence[Formula], y: str, anchor: str | None) -> tuple:
    xs = tuple(sorted(set().union(*(free_vars(phi) for phi in phis)) - {y}))
    if not xs:
        if anchor is None:
            used = set().union(*(all_vars(phi) for phi in phis))
            anchor = "u0"
            i = 0
            while anchor in used or anchor == y:
                i += 1
                anchor = f"u{i}"
        xs = (anchor,)
    return xs


def eliminate_exists(s: FunctionalStructure, phi: Formula, y: str, anchor: str | None = None):
    """Exact quantifier-free equivalent of ``exists y phi`` (``phi`` quantifier-free).

    A positive decomposition has a positive sum exactly when some witness
    exists, so positivity predicates per type and position decide it.
    ``anchor`` names the variable used when ``phi`` has no other free
    variable; the result is then constant in it.
    """
    xs = _free_tuple([phi], y, anchor)
    if s.universe_size == 0:
        return s, FALSE
    s, _, table = approx_weights(s, phi, 1, y, xs)
    return bucketize(s, table, 0, 1)


def eliminate_fo(s: FunctionalStructure, phi: Formula, anchor: str | None = None):
    """Remove first-order quantifiers from ``phi``, innermost first."""
    if isinstance(phi, (Top, Bottom)) or is_atom(phi):
        return s, phi
    if isinstance(phi, Not):
        s, a = eliminate_fo(s, phi.arg, anchor)
        return s, neg(a)
    if isinstance(phi, (And, Or)):
        parts = []
        for a in phi.args:
            s, b = eliminate_fo(s, a, anchor)
            parts.append(b)
        return s, (conj if isinstance(phi, And) else disj)(parts)
    if isinstance(phi, Implies):
        return eliminate_fo(s, Or((Not(phi.left), phi.right)), anchor)
    if isinstance(phi, Exists):
        s, body = eliminate_fo(s, phi.body, anchor)
        return eliminate_exists(s, body, phi.var, anchor)
    if isinstance(phi, Forall):
        s, body = eliminate_fo(s, phi.body, anchor)
        s, out = eliminate_exists(s, neg(body), phi.var, anchor)
        return s, neg(out)
    if isinstance(phi, Count):
        raise ShapeError("counting atoms are not first-order")
    raise TypeError(f"not a formula: {phi!r}")


def _side(s: FunctionalStructure, body: Formula, y: str, xs, t_side: int, cap: int, eps: Fraction,
          cache: dict):
    """Formula true only if count > t_side, and false only if count <= cap."""
    n = s.universe_size
    if t_side < 0:
        return s, TRUE
    if t_side >= n:
        return s, FALSE
    if t_side == 0:
        s, _, table = approx_weights(s, body, 1, y, xs)
        return bucketize(s, table, 0, 1)
    eps_b = min(eps, Fraction(cap + 1 - t_side, 2 * t_side))
    got = cache.get(body)
    if got is None or got[1] > eps_b / 2:
        s, _, table = approx_weights(s, body, eps_b / 2, y, xs)
        cache[body] = (table, eps_b / 2)
    else:
        table = got[0]
    return bucketize(s, table, t_side, eps_b)


def eliminate_count(p: ApproxPair, y: str, N: int, cmp: str = ">", anchor: str | None = None) -> ApproxPair:
    """Approximation pair for ``#y phi cmp N`` from one for ``phi``.

    The under-approximation tests ``> T`` against the largest similar
    threshold; the over-approximation tests the smallest similar threshold
    against ``> T``.  Comparators ``<=`` and ``<`` negate and swap the pair.
    """
    eps = Fraction(p.epsilon)
    negated, t = strict_form(cmp, N)
    shift = N - t
    lo, hi = similar_range(N, 1 + eps)
    xs = _free_tuple([p.phi_plus, p.phi_minus], y, anchor)
    s = p.structure
    start_preds = len(s.signature.predicate_symbols)
    start_funcs = len(s.signature.function_symbols)
    cache: dict = {}
    s, minus = _side(s, p.phi_minus, y, xs, t, hi - shift, eps, cache)
    s, plus = _side(s, p.phi_plus, y, xs, lo - shift, t, eps, cache)
    if negated:
        plus, minus = neg(minus), neg(plus)
    record = {
        "quantifier": f"#{y} {cmp}",
        "threshold": N,
        "new_predicates": len(s.signature.predicate_symbols) - start_preds,
        "new_functions": len(s.signature.function_symbols) - start_funcs,
        "indegree": s.indegree(),
    }
    return ApproxPair(s, plus, minus, eps, p.log + [record])


@dataclass
class CheckResult:
    answer: int | None  # 1, 0 or None for "unknown"
    epsilon: Fraction
    rounds: list
    wall_time_ms: float
    pair: ApproxPair | None = None

    def record(self) -> dict:
        return {
            "answer": "unknown" if self.answer is None else str(self.answer),
            "epsilon": str(self.epsilon),
            "rounds": self.rounds,
            "wall_time_ms": self.wall_time_ms,
        }


def functional_setup(g: LabeledGraph, f: Formula) -> tuple[FunctionalStructure, Formula]:
    """Orient ``g``, add empty predicates for unknown labels and translate edge atoms."""
    s = orient(g)
    missing = sorted(predicate_names(f) - set(s.signature.predicate_symbols))
    if missing:
        logger.warning("unknown labels treated as empty: %s", ", ".join(missing))
        s = s.with_predicates({p: np.zeros(s.universe_size, dtype=bool) for p in missing})
    return s, relational_to_functional(f, s.signature)


def approximate(s: FunctionalStructure, f: Formula, eps, anchor: str) -> ApproxPair:
    """Approximation pair for an arbitrary formula, by structural recursion."""
    eps = Fraction(eps)

    def go(s, g: Formula, log):
        if isinstance(g, (Top, Bottom)) or is_atom(g):
            return ApproxPair(s, g, g, eps, log)
        if isinstance(g, Not):
            p = go(s, g.arg, log)
            return ApproxPair(p.structure, neg(p.phi_minus), neg(p.phi_plus), eps, p.log)
        if isinstance(g, (And, Or)):
            join = conj if isinstance(g, And) else disj
            plus, minus = [], []
            for a in g.args:
                p = go(s, a, log)
                s, log = p.structure, p.log
                plus.append(p.phi_plus)
                minus.append(p.phi_minus)
            return ApproxPair(s, join(plus), join(minus), eps, log)
        if isinstance(g, Implies):
            return go(s, Or((Not(g.left), g.right)), log)
        if isinstance(g, Forall):
            return go(s, Not(Exists(g.var, Not(g.body))), log)
        if isinstance(g, Exists):
            p = go(s, g.body, log)
            s = p.structure
            start = (len(s.signature.predicate_symbols), len(s.signature.function_symbols))
            s, minus = eliminate_exists(s, p.phi_minus, g.var, anchor)
            if p.phi_plus == p.phi_minus:
                plus = minus
            else:
                s, plus = eliminate_exists(s, p.phi_plus, g.var, anchor)
            record = {
                "quantifier": f"exists {g.var}",
                "threshold": 0,
                "new_predicates": len(s.signature.predicate_symbols) - start[0],
                "new_functions": len(s.signature.function_symbols) - start[1],
                "indegree": s.indegree(),
            }
            return ApproxPair(s, plus, minus, eps, p.log + [record])
        if isinstance(g, Count):
            p = go(s, g.body, log)
            return eliminate_count(p, g.var, g.threshold, g.cmp, anchor)
        raise TypeError(f"not a formula: {g!r}")

    return go(s, f, [])


def check_sentence(g: LabeledGraph, f: Formula, eps) -> CheckResult:
    """Three-valued model check: 1 (true), 0 (false) or None (unstable at ``1 + eps``).

    Answer 1 means the graph satisfies the sentence, 0 that it does not;
    None is only returned when some ``(1 + eps)``-similar variants of the
    sentence disagree on the graph.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ContractError("epsilon must be positive")
    if free_vars(f):
        raise ShapeError(f"not a sentence; free variables {sorted(free_vars(f))}")
    start = time.perf_counter()
    if g.vertex_count == 0:
        from .oracle import evaluate_formula
        answer = 1 if evaluate_formula(f, g, {}) else 0
        return CheckResult(answer, eps, [], (time.perf_counter() - start) * 1000)
    s, phi = functional_setup(g, f)
    used = all_vars(phi)
    anchor = "u0"
    i = 0
    while anchor in used:
        i += 1
        anchor = f"u{i}"
    pair = approximate(s, phi, eps, anchor)
    env = {anchor: np.zeros(1, dtype=np.int64)}
    minus = bool(evaluate(pair.phi_minus, pair.structure, env).reshape(-1)[0])
    plus = bool(evaluate(pair.phi_plus, pair.structure, env).reshape(-1)[0])
    if minus and not plus:
        raise ContractError("under-approximation holds while over-approximation fails")
    answer = 1 if minus else (0 if not plus else None)
    elapsed = (time.perf_counter() - start) * 1000
    logger.info("check: answer=%s rounds=%d time=%.1fms", answer, len(pair.log), elapsed)
    return CheckResult(answer, eps, pair.log, elapsed, pair)
