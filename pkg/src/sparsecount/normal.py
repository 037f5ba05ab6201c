"""Normal forms and rewritings of formulas."""

from __future__ import annotations

import itertools
import logging
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping

from .errors import BudgetExceeded, ShapeError
from .graph import IDENTITY, FunctionalStructure, Signature, edge_formula
from .logic import (FALSE, TRUE, And, App, Bottom, Count, Edge, Eq, Exists, Forall, Formula,
                    Implies, Not, Or, Pred, Top, Var, atom_terms, build_term, conj,
                    counting_atoms, disj, eq, formula_depth, free_vars, is_atom, map_atoms,
                    neg, rename_apart, rename_free, replace_thresholds, similar_range,
                    term_symbols, term_vars, walk)

logger = logging.getLogger(__name__)


class ConjClause:
    """Conjunction of literals, kept as a partial map ``atom -> bool``.

    Atoms missing from the map are undecided.  A clause never holds an atom
    with both signs; :meth:`add` returns ``None`` instead.
    """

    __slots__ = ("_lits", "_hash")

    def __init__(self, lits: Mapping[Formula, bool] | Iterable[tuple[Formula, bool]] = ()):
        self._lits = dict(lits)
        self._hash = None

    def value(self, atom: Formula):
        return self._lits.get(atom)

    def add(self, atom: Formula, value: bool = True) -> "ConjClause | None":
        if isinstance(atom, (Top, Bottom)):
            return self if isinstance(atom, Top) == value else None
        if isinstance(atom, Not):
            return self.add(atom.arg, not value)
        old = self._lits.get(atom)
        if old is None:
            lits = dict(self._lits)
            lits[atom] = value
            return ConjClause(lits)
        return self if old == value else None

    def extend(self, lits: Iterable[tuple[Formula, bool]]) -> "ConjClause | None":
        out = self
        for atom, value in lits:
            out = out.add(atom, value)
            if out is None:
                return None
        return out

    def items(self):
        return sorted(self._lits.items(), key=lambda kv: (str(kv[0]), kv[1]))

    def atoms(self):
        return self._lits.keys()

    def formula(self) -> Formula:
        return conj(a if v else Not(a) for a, v in self.items())

    def restrict(self, keep: Callable[[Formula], bool]) -> "ConjClause":
        return ConjClause((a, v) for a, v in self._lits.items() if keep(a))

    def __len__(self) -> int:
        return len(self._lits)

    def __bool__(self) -> bool:
        return True

    def __eq__(self, other) -> bool:
        return isinstance(other, ConjClause) and self._lits == other._lits

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._lits.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"ConjClause({self.formula()})"

    def __str__(self) -> str:
        return str(self.formula())


def relational_to_functional(f: Formula, sig: Signature) -> Formula:
    """Replace every ``E(x, y)`` by the edge formula of the oriented encoding."""

    def tr(atom: Formula) -> Formula:
        if isinstance(atom, Edge):
            if not (isinstance(atom.left, Var) and isinstance(atom.right, Var)):
                raise ShapeError("edge atoms may only relate variables")
            return edge_formula(sig, atom.left.name, atom.right.name)
        return atom

    return map_atoms(f, tr)


# ---------------------------------------------------------------- DNF

def _nnf_atoms(f: Formula):
    for g in walk(f):
        if isinstance(g, (Exists, Forall, Count)):
            raise ShapeError("DNF requires a quantifier-free formula")


def to_dnf(f: Formula) -> set[ConjClause]:
    """Disjunctive normal form by distribution; contradictory clauses are dropped."""
    _nnf_atoms(f)

    def go(g: Formula, positive: bool) -> list[ConjClause]:
        if isinstance(g, Top):
            return [ConjClause()] if positive else []
        if isinstance(g, Bottom):
            return [] if positive else [ConjClause()]
        if is_atom(g):
            return [ConjClause({g: positive})]
        if isinstance(g, Not):
            return go(g.arg, not positive)
        if isinstance(g, Implies):
            return go(Or((Not(g.left), g.right)), positive)
        if isinstance(g, And) == positive:  # conjunction
            out = [ConjClause()]
            for a in g.args:
                nxt = []
                for left in out:
                    for right in go(a, positive):
                        merged = left.extend(right.items())
                        if merged is not None:
                            nxt.append(merged)
                out = nxt
                if not out:
                    break
            return out
        out = []
        for a in g.args:
            out.extend(go(a, positive))
        return out

    return set(go(f, True))


def first_atom(f: Formula):
    for g in walk(f):
        if is_atom(g):
            return g
    return None


def exclusive_dnf(f: Formula, alive: Callable[[ConjClause], bool] | None = None,
                  start: ConjClause | None = None) -> Iterator[ConjClause]:
    """Mutually exclusive DNF by Shannon expansion on atoms in pre-order.

    ``alive`` may reject partial clauses (for instance those with empty
    extension on a fixed structure); rejected branches are not expanded.
    """
    _nnf_atoms(f)
    stack = [(f, start or ConjClause())]
    while stack:
        g, clause = stack.pop()
        if isinstance(g, Bottom):
            continue
        if isinstance(g, Top):
            yield clause
            continue
        a = first_atom(g)
        branches = []
        for value in (True, False):
            c = clause.add(a, value)
            if c is None or (alive is not None and not alive(c)):
                continue
            sub = map_atoms(g, lambda x, a=a, value=value: (TRUE if value else FALSE) if x == a else x)
            branches.append((sub, c))
        stack.extend(reversed(branches))


# ---------------------------------------------------------------- counting prenex normal form

def _is_qf(f: Formula) -> bool:
    return not any(isinstance(g, (Exists, Forall, Count)) for g in walk(f))


def _desugar(f: Formula) -> Formula:
    """Remove ->, exists, forall; express comparators as (negated) ``> T``."""
    if isinstance(f, (Top, Bottom)) or is_atom(f):
        return f
    if isinstance(f, Not):
        return neg(_desugar(f.arg))
    if isinstance(f, And):
        return conj(_desugar(a) for a in f.args)
    if isinstance(f, Or):
        return disj(_desugar(a) for a in f.args)
    if isinstance(f, Implies):
        return disj([neg(_desugar(f.left)), _desugar(f.right)])
    if isinstance(f, Exists):
        return Count(f.var, _desugar(f.body), ">", 0)
    if isinstance(f, Forall):
        return neg(Count(f.var, neg(_desugar(f.body)), ">", 0))
    if isinstance(f, Count):
        from .logic import strict_form
        negated, t = strict_form(f.cmp, f.threshold)
        c = Count(f.var, _desugar(f.body), ">", t)
        return neg(c) if negated else c
    raise TypeError(f"not a formula: {f!r}")


def to_cpnf(f: Formula, n: int) -> Formula:
    """Counting prenex normal form, equivalent to ``f`` on universes of size ``n``.

    Thresholds are clamped (``> T`` with ``T < 0`` is true, with ``T >= n``
    false), then conjunctions and disjunctions are pushed into counting
    bodies until every connective has quantifier-free operands.
    """
    if free_vars(f):
        raise ShapeError(f"to_cpnf needs a sentence; free variables {sorted(free_vars(f))}")
    f = rename_apart(f)
    used = set()
    for g in walk(f):
        if isinstance(g, (Exists, Forall, Count)):
            used.add(g.var)

    def fresh(base: str) -> str:
        i = 1
        while f"{base}_{i}" in used:
            i += 1
        used.add(f"{base}_{i}")
        return f"{base}_{i}"

    def clamp(g: Formula) -> Formula:
        if isinstance(g, Count):
            if g.threshold < 0:
                return TRUE
            if g.threshold >= n:
                return FALSE
            return Count(g.var, clamp(g.body), ">", g.threshold)
        if isinstance(g, Not):
            return neg(clamp(g.arg))
        if isinstance(g, And):
            return conj(clamp(a) for a in g.args)
        if isinstance(g, Or):
            return disj(clamp(a) for a in g.args)
        return g

    def push(g: Formula) -> Formula:
        if _is_qf(g):
            return g
        if isinstance(g, Not):
            return neg(push(g.arg))
        if isinstance(g, Count):
            return Count(g.var, push(g.body), ">", g.threshold)
        parts = [push(a) for a in g.args]
        is_and = isinstance(g, And)
        idx = next(i for i, p in enumerate(parts) if not _is_qf(p))
        head = parts[idx]
        rest = (conj if is_and else disj)(parts[:idx] + parts[idx + 1:])
        if isinstance(head, Not):
            # not A & B == not (A | not B);  not A | B == not (A & not B)
            inner = (disj if is_and else conj)([head.arg, neg(rest)])
            return neg(push(inner))
        assert isinstance(head, Count)
        y = head.var
        body = head.body
        if y in free_vars(rest):
            y2 = fresh(y)
            body = rename_free(body, {y: y2})
            y = y2
        if is_and:
            new_body = conj([body, rest])
        elif _is_qf(rest):
            new_body = disj([conj([body, neg(rest)]), rest])
        else:
            # clamping keeps T < n, so phi | psi counts the same; no second copy of psi
            new_body = disj([body, rest])
        return Count(y, push(clamp(new_body)), ">", head.threshold)

    return push(clamp(_desugar(f)))


def is_cpnf(f: Formula) -> bool:
    for g in walk(f):
        if isinstance(g, (Exists, Forall, Implies)):
            return False
        if isinstance(g, (And, Or)) and not all(_is_qf(a) for a in g.args):
            return False
    return True


# ---------------------------------------------------------------- depth reduction

def with_composites(s: FunctionalStructure, pairs: Iterable[tuple[str, str]]) -> FunctionalStructure:
    """Expansion of ``s`` by composites ``h_{f,g} = g . f`` for the given pairs."""
    from .graph import TRANSITIVE

    new, index = {}, {}
    taken = set(s.signature.function_symbols) | set(s.signature.predicate_symbols)
    for f, g in pairs:
        if (f, g) in s.signature.composite_index or (f, g) in index:
            continue
        name = f"h[{f},{g}]"
        while name in taken:
            name += "'"
        taken.add(name)
        new[name] = s.fn_tables[g][s.fn_tables[f]]
        index[(f, g)] = name
    if not new:
        return s
    return s.with_functions(new, TRANSITIVE, index)


def reduce_depth(f: Formula, s: FunctionalStructure) -> tuple[Formula, FunctionalStructure]:
    """Rewrite ``f`` to functional depth at most one using composite symbols.

    Each round pairs up adjacent symbols of every deep term, adds the needed
    composites to the structure and substitutes them, halving the depth.
    """
    if not _is_qf(f):
        raise ShapeError("reduce_depth requires a quantifier-free formula")

    def strip(t):
        return build_term(term_vars(t), [g for g in term_symbols(t) if g != IDENTITY])

    f = map_atoms(f, lambda a: _map_terms(a, strip))
    while formula_depth(f) > 1:
        pairs = []
        for g in walk(f):
            for t in atom_terms(g):
                syms = term_symbols(t)
                pairs.extend((syms[j], syms[j + 1]) for j in range(0, len(syms) - 1, 2))
        s = with_composites(s, pairs)
        index = s.signature.composite_index

        def halve(t, index=index):
            syms = term_symbols(t)
            out = [index[(syms[j], syms[j + 1])] for j in range(0, len(syms) - 1, 2)]
            if len(syms) % 2:
                out.append(syms[-1])
            return build_term(term_vars(t), out)

        f = map_atoms(f, lambda a, halve=halve: _map_terms(a, halve))
    return f, s


def _map_terms(atom: Formula, fn) -> Formula:
    if isinstance(atom, Pred):
        return Pred(atom.name, fn(atom.term))
    if isinstance(atom, Eq):
        return eq(fn(atom.left), fn(atom.right))
    if isinstance(atom, Edge):
        return Edge(fn(atom.left), fn(atom.right))
    return atom


# ---------------------------------------------------------------- similarity

def similar_extremes(f: Formula, lam, endpoints_only: bool = False, cap: int | None = None) -> set[Formula]:
    """All formulas obtained by replacing each counting threshold by a similar integer.

    With ``endpoints_only`` only the two extreme choices per threshold are
    used.  ``cap`` bounds the number of formulas generated.
    """
    lam = Fraction(lam)
    atoms = counting_atoms(f)
    choices = []
    total = 1
    for c in atoms:
        lo, hi = similar_range(c.threshold, lam)
        opts = sorted({lo, hi}) if endpoints_only else list(range(lo, hi + 1))
        choices.append(opts)
        total *= len(opts)
    if cap is not None and total > cap:
        raise BudgetExceeded(f"{total} similar formulas exceed the cap {cap}")
    return {replace_thresholds(f, list(ts)) for ts in itertools.product(*choices)}
