"""Formula AST for first-order logic with counting atoms ``#y phi cmp N``.

Formulas are immutable values.  Comparators ``>``, ``<=``, ``<`` and ``>=``
are kept as written so that threshold perturbations act on the constants
the user wrote; :func:`strict_form` rewrites each of them as a possibly
negated ``> T`` test for the elimination code.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

import numpy as np

from .errors import ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    fn: str
    arg: "Term"

    def __str__(self) -> str:
        return f"{self.fn}({self.arg})"


Term = Union[Var, App]


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)

    def __and__(self, other: "Formula") -> "Formula":
        return conj([self, other])

    def __or__(self, other: "Formula") -> "Formula":
        return disj([self, other])

    def __invert__(self) -> "Formula":
        return neg(self)


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


TRUE = Top()
FALSE = Bottom()


@dataclass(frozen=True)
class Pred(Formula):
    name: str
    term: Term


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Edge(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple


@dataclass(frozen=True)
class Or(Formula):
    args: tuple


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


COMPARATORS = (">", "<=", ">=", "<")


@dataclass(frozen=True)
class Count(Formula):
    """``#var body cmp threshold`` with an arbitrary-precision integer threshold."""

    var: str
    body: Formula
    cmp: str
    threshold: int

    def __post_init__(self):
        if self.cmp not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.cmp!r}")
        if not isinstance(self.threshold, int) or isinstance(self.threshold, bool):
            raise TypeError("counting threshold must be an int")


ATOMS = (Pred, Eq, Edge, Top, Bottom)
QUANTIFIERS = (Exists, Forall, Count)


def is_atom(f: Formula) -> bool:
    return isinstance(f, (Pred, Eq, Edge))


def strict_form(cmp: str, threshold: int) -> tuple[bool, int]:
    """Return ``(negated, T)`` with ``count cmp N`` equivalent to ``[not] count > T``."""
    if cmp == ">":
        return False, threshold
    if cmp == "<=":
        return True, threshold
    if cmp == ">=":
        return False, threshold - 1
    return True, threshold - 1


def similar_range(t: int, lam) -> tuple[int, int]:
    """Integer interval of thresholds ``t'`` with ``t/lam <= t' <= lam*t`` (swapped if ``t < 0``)."""
    lam = Fraction(lam)
    if lam < 1:
        raise ValueError("lambda must be at least 1")
    a, b = Fraction(t) / lam, Fraction(t) * lam
    if t < 0:
        a, b = b, a
    lo = -((-a.numerator) // a.denominator)
    hi = b.numerator // b.denominator
    return lo, hi


# ---------------------------------------------------------------- terms

def term_vars(t: Term) -> str:
    while isinstance(t, App):
        t = t.arg
    return t.name


def term_depth(t: Term) -> int:
    d = 0
    while isinstance(t, App):
        d += 1
        t = t.arg
    return d


def term_symbols(t: Term) -> list[str]:
    """Function symbols of ``t`` from innermost to outermost."""
    out = []
    while isinstance(t, App):
        out.append(t.fn)
        t = t.arg
    out.reverse()
    return out


def build_term(var: str, symbols: Iterable[str]) -> Term:
    """Apply ``symbols`` (innermost first) to a variable."""
    t: Term = Var(var)
    for f in symbols:
        t = App(f, t)
    return t


def subst_term(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    return App(t.fn, subst_term(t.arg, mapping))


# ---------------------------------------------------------------- smart constructors

def _term_key(t: Term) -> tuple:
    return (term_depth(t), str(t))


def eq(a: Term, b: Term) -> Formula:
    if a == b:
        return TRUE
    if _term_key(b) < _term_key(a):
        a, b = b, a
    return Eq(a, b)


def neg(f: Formula) -> Formula:
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, Top):
        return FALSE
    if isinstance(f, Bottom):
        return TRUE
    return Not(f)


def conj(parts: Iterable[Formula]) -> Formula:
    out = []
    seen = set()
    for p in parts:
        items = p.args if isinstance(p, And) else (p,)
        for q in items:
            if isinstance(q, Bottom):
                return FALSE
            if isinstance(q, Top) or q in seen:
                continue
            seen.add(q)
            out.append(q)
    for q in out:
        if neg(q) in seen:
            return FALSE
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(parts: Iterable[Formula]) -> Formula:
    out = []
    seen = set()
    for p in parts:
        items = p.args if isinstance(p, Or) else (p,)
        for q in items:
            if isinstance(q, Top):
                return TRUE
            if isinstance(q, Bottom) or q in seen:
                continue
            seen.add(q)
            out.append(q)
    for q in out:
        if neg(q) in seen:
            return TRUE
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def ite(c: Formula, a: Formula, b: Formula) -> Formula:
    """``(c and a) or (not c and b)``; the shape splits cleanly in exclusive DNF."""
    if a == b:
        return a
    return disj([conj([c, a]), conj([neg(c), b])])


# ---------------------------------------------------------------- traversal

def children(f: Formula) -> tuple:
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, Implies):
        return (f.left, f.right)
    if isinstance(f, (Exists, Forall, Count)):
        return (f.body,)
    return ()


def walk(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def atom_terms(f: Formula) -> tuple:
    if isinstance(f, Pred):
        return (f.term,)
    if isinstance(f, (Eq, Edge)):
        return (f.left, f.right)
    return ()


def free_vars(f: Formula) -> frozenset:
    if isinstance(f, (Top, Bottom)):
        return frozenset()
    if is_atom(f):
        return frozenset(term_vars(t) for t in atom_terms(f))
    if isinstance(f, (Exists, Forall, Count)):
        return free_vars(f.body) - {f.var}
    out: frozenset = frozenset()
    for c in children(f):
        out |= free_vars(c)
    return out


def bound_vars(f: Formula) -> set:
    return {g.var for g in walk(f) if isinstance(g, (Exists, Forall, Count))}


def all_vars(f: Formula) -> set:
    out = set(bound_vars(f))
    for g in walk(f):
        for t in atom_terms(g):
            out.add(term_vars(t))
    return out


def formula_depth(f: Formula) -> int:
    """Maximum functional depth of a term occurring in ``f``."""
    return max((term_depth(t) for g in walk(f) for t in atom_terms(g)), default=0)


def is_quantifier_free(f: Formula) -> bool:
    return not any(isinstance(g, QUANTIFIERS) for g in walk(f))


def counting_atoms(f: Formula) -> list[Count]:
    """Counting atoms in pre-order; their positions identify thresholds."""
    return [g for g in walk(f) if isinstance(g, Count)]


def function_symbols(f: Formula) -> set:
    out = set()
    for g in walk(f):
        for t in atom_terms(g):
            out.update(term_symbols(t))
    return out


def predicate_names(f: Formula) -> set:
    return {g.name for g in walk(f) if isinstance(g, Pred)}


def map_atoms(f: Formula, fn) -> Formula:
    """Rebuild ``f`` with every atom replaced by ``fn(atom)``; connectives are simplified."""
    if is_atom(f):
        return fn(f)
    if isinstance(f, (Top, Bottom)):
        return f
    if isinstance(f, Not):
        return neg(map_atoms(f.arg, fn))
    if isinstance(f, And):
        return conj(map_atoms(a, fn) for a in f.args)
    if isinstance(f, Or):
        return disj(map_atoms(a, fn) for a in f.args)
    if isinstance(f, Implies):
        return disj([neg(map_atoms(f.left, fn)), map_atoms(f.right, fn)])
    if isinstance(f, Exists):
        return Exists(f.var, map_atoms(f.body, fn))
    if isinstance(f, Forall):
        return Forall(f.var, map_atoms(f.body, fn))
    if isinstance(f, Count):
        return Count(f.var, map_atoms(f.body, fn), f.cmp, f.threshold)
    raise TypeError(f"not a formula: {f!r}")


def rename_free(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename free variables; bound variables must not clash with the targets."""
    if not mapping:
        return f
    if isinstance(f, (Top, Bottom)):
        return f
    if is_atom(f):
        terms = [subst_term(t, {k: Var(v) for k, v in mapping.items()}) for t in atom_terms(f)]
        if isinstance(f, Pred):
            return Pred(f.name, terms[0])
        return type(f)(*terms)
    if isinstance(f, (Exists, Forall, Count)):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        if f.var in inner.values():
            raise ShapeError(f"renaming would capture bound variable {f.var!r}")
        body = rename_free(f.body, inner)
        if isinstance(f, Count):
            return Count(f.var, body, f.cmp, f.threshold)
        return type(f)(f.var, body)
    if isinstance(f, Not):
        return Not(rename_free(f.arg, mapping))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(rename_free(a, mapping) for a in f.args))
    if isinstance(f, Implies):
        return Implies(rename_free(f.left, mapping), rename_free(f.right, mapping))
    raise TypeError(f"not a formula: {f!r}")


def rename_apart(f: Formula, avoid: Iterable[str] = ()) -> Formula:
    """Give every quantifier a distinct variable that is also not free in ``f``."""
    used = set(avoid) | set(free_vars(f))

    def fresh(name: str) -> str:
        if name not in used:
            used.add(name)
            return name
        i = 1
        while f"{name}_{i}" in used:
            i += 1
        used.add(f"{name}_{i}")
        return f"{name}_{i}"

    def go(g: Formula, env: dict) -> Formula:
        if isinstance(g, (Top, Bottom)):
            return g
        if is_atom(g):
            return rename_free(g, env)
        if isinstance(g, (Exists, Forall, Count)):
            v = fresh(g.var)
            body = go(g.body, {**env, g.var: v})
            if isinstance(g, Count):
                return Count(v, body, g.cmp, g.threshold)
            return type(g)(v, body)
        if isinstance(g, Not):
            return Not(go(g.arg, env))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(go(a, env) for a in g.args))
        if isinstance(g, Implies):
            return Implies(go(g.left, env), go(g.right, env))
        raise TypeError(f"not a formula: {g!r}")

    return go(f, {})


def replace_thresholds(f: Formula, thresholds: list[int]) -> Formula:
    """Replace counting thresholds, in pre-order, by the given values."""
    it = iter(thresholds)

    def go(g: Formula) -> Formula:
        if isinstance(g, Count):
            t = next(it)
            return Count(g.var, go(g.body), g.cmp, t)
        if isinstance(g, Not):
            return Not(go(g.arg))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(go(a) for a in g.args))
        if isinstance(g, Implies):
            return Implies(go(g.left), go(g.right))
        if isinstance(g, (Exists, Forall)):
            return type(g)(g.var, go(g.body))
        return g

    return go(f)


# ---------------------------------------------------------------- printing

_PREC = {Implies: 1, Or: 2, And: 3}


def to_text(f: Formula) -> str:
    """Render ``f`` in the query syntax accepted by :func:`parse_query`."""

    def go(g: Formula, ctx: int) -> str:
        if isinstance(g, Top):
            return "true"
        if isinstance(g, Bottom):
            return "false"
        if isinstance(g, Pred):
            return f"{g.name}({g.term})"
        if isinstance(g, Eq):
            return f"{g.left} = {g.right}"
        if isinstance(g, Edge):
            return f"E({g.left},{g.right})"
        if isinstance(g, Not):
            inner = go(g.arg, 4)
            return f"!{inner}"
        if isinstance(g, (And, Or)):
            p = _PREC[type(g)]
            sep = " & " if isinstance(g, And) else " | "
            s = sep.join(go(a, p + 1) for a in g.args)
            return f"({s})" if ctx > p else s
        if isinstance(g, Implies):
            s = f"{go(g.left, 2)} -> {go(g.right, 1)}"
            return f"({s})" if ctx > 1 else s
        if isinstance(g, Exists):
            s = f"exists {g.var}. {go(g.body, 0)}"
            return f"({s})" if ctx > 0 else s
        if isinstance(g, Forall):
            s = f"forall {g.var}. {go(g.body, 0)}"
            return f"({s})" if ctx > 0 else s
        if isinstance(g, Count):
            s = f"# {g.var}. ({go(g.body, 0)}) {g.cmp} {g.threshold}"
            return f"({s})" if ctx > 0 else s
        raise TypeError(f"not a formula: {g!r}")

    s = go(f, 0)
    return s


# ---------------------------------------------------------------- vectorised evaluation

def eval_term(t: Term, s, env: Mapping[str, np.ndarray]) -> np.ndarray:
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise ShapeError(f"unbound variable {t.name!r}") from None
    inner = eval_term(t.arg, s, env)
    return s.fn_tables[t.fn][inner]


def evaluate(f: Formula, s, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Evaluate a quantifier-free formula on a functional structure, elementwise.

    ``env`` maps variables to equally shaped (or broadcastable) integer
    arrays; the result is a boolean array of the broadcast shape.
    """
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
    if isinstance(f, Top):
        return np.ones(shape, dtype=bool)
    if isinstance(f, Bottom):
        return np.zeros(shape, dtype=bool)
    if isinstance(f, Pred):
        mask = s.predicates.get(f.name)
        if mask is None:
            logger.warning("unknown predicate %r treated as empty", f.name)
            return np.zeros(shape, dtype=bool)
        return np.broadcast_to(mask[eval_term(f.term, s, env)], shape)
    if isinstance(f, Eq):
        return np.broadcast_to(eval_term(f.left, s, env) == eval_term(f.right, s, env), shape)
    if isinstance(f, Edge):
        raise ShapeError("edge atoms must be translated before functional evaluation")
    if isinstance(f, Not):
        return ~evaluate(f.arg, s, env)
    if isinstance(f, And):
        out = np.ones(shape, dtype=bool)
        for a in f.args:
            out = out & evaluate(a, s, env)
        return out
    if isinstance(f, Or):
        out = np.zeros(shape, dtype=bool)
        for a in f.args:
            out = out | evaluate(a, s, env)
        return out
    if isinstance(f, Implies):
        return ~evaluate(f.left, s, env) | evaluate(f.right, s, env)
    raise ShapeError(f"cannot evaluate quantified formula elementwise: {to_text(f)}")


def evaluate_all(f: Formula, s, variables: list[str]) -> np.ndarray:
    """Truth of a quantifier-free ``f`` on every tuple, as an ``n**k`` boolean array."""
    n = s.universe_size
    k = len(variables)
    grids = np.indices((n,) * k) if k else []
    env = {v: grids[j] for j, v in enumerate(variables)}
    out = evaluate(f, s, env)
    return np.broadcast_to(out, (n,) * k)
