"""Canonical conjunctive clauses ``tau(y) & psi(xs) & Delta_eq & Delta_neq``.

A clause splits a quantifier-free depth-one formula into a part over the
counted variable ``y`` (``tau``), a part over the remaining variables
(``psi``), positive mixed literals ``f(y) = g(x_i)`` and negative ones.
``tau`` and ``psi`` are completed lazily: a literal is only decided when a
rule needs it, and the clause splits on it then.  When a structure is
supplied, splits are grouped by the actual truth of the probed literals so
branches with no ``tau``-vertex are never created.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, ContractError, ShapeError
from .graph import IDENTITY, FunctionalStructure
from .logic import (FALSE, TRUE, App, Bottom, Eq, Formula, Not, Pred, Top, Var, atom_terms,
                    build_term, conj, eq, eval_term, evaluate, formula_depth, free_vars, ite, map_atoms,
                    neg, subst_term, term_symbols, term_vars)
from .normal import ConjClause, exclusive_dnf

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------- term normalisation

class Normalizer:
    """Rewrites terms to a canonical spelling.

    Identity applications are dropped; with a structure, symbols with equal
    tables share one representative and ``g(f(t))`` is folded into a single
    symbol whenever some symbol has the table ``g . f``.
    """

    def __init__(self, s: FunctionalStructure | None = None):
        self.s = s
        self._rep: dict[str, str] = {}
        self._by_table: dict[bytes, str] = {}
        self._compose: dict[tuple[str, str], str | None] = {}
        self._atoms: dict[Formula, Formula] = {}
        if s is not None:
            for f in s.signature.function_symbols:
                key = s.fn_tables[f].tobytes()
                rep = self._by_table.setdefault(key, f)
                self._rep[f] = IDENTITY if key == s.fn_tables[IDENTITY].tobytes() else rep
            self._by_table[s.fn_tables[IDENTITY].tobytes()] = IDENTITY

    @classmethod
    def of(cls, s: FunctionalStructure | None) -> "Normalizer":
        if s is None:
            return cls(None)
        norm = s.cache.get("normalizer")
        if norm is None:
            norm = s.cache["normalizer"] = cls(s)
        return norm

    def symbol(self, f: str) -> str:
        return self._rep.get(f, f)

    def representatives(self) -> list[str]:
        """Distinct function tables, identity first."""
        if self.s is None:
            return [IDENTITY]
        out = [IDENTITY]
        for f in self.s.signature.function_symbols:
            r = self._rep[f]
            if r == f and f != IDENTITY:
                out.append(f)
        return out

    def compose(self, f: str, g: str) -> str | None:
        """A symbol for ``g . f`` (apply ``f`` first), if one exists."""
        f, g = self.symbol(f), self.symbol(g)
        if f == IDENTITY:
            return g
        if g == IDENTITY:
            return f
        key = (f, g)
        if key not in self._compose:
            name = None
            if self.s is not None:
                name = self.s.signature.composite_index.get(key)
                if name is None:
                    table = self.s.fn_tables[g][self.s.fn_tables[f]]
                    name = self._by_table.get(table.tobytes())
                if name is not None:
                    name = self.symbol(name)
            self._compose[key] = name
        return self._compose[key]

    def term(self, t):
        syms = [self.symbol(f) for f in term_symbols(t)]
        syms = [f for f in syms if f != IDENTITY]
        out: list[str] = []
        for f in syms:
            if out:
                c = self.compose(out[-1], f)
                if c is not None:
                    out.pop()
                    if c != IDENTITY:
                        out.append(c)
                    continue
            out.append(f)
        return build_term(term_vars(t), out)

    def atom(self, a: Formula) -> Formula:
        got = self._atoms.get(a)
        if got is None:
            if isinstance(a, Pred):
                got = Pred(a.name, self.term(a.term))
            elif isinstance(a, Eq):
                got = eq(self.term(a.left), self.term(a.right))
            else:
                got = a
            self._atoms[a] = got
        return got

    def formula(self, f: Formula) -> Formula:
        return map_atoms(f, self.atom)


def _constant_value(s: FunctionalStructure, t) -> int | None:
    """The single value of term ``t`` when it does not depend on its variable."""
    n = s.universe_size
    if n == 0 or isinstance(t, Var):
        return None if n != 1 else 0
    cache = s.cache.setdefault("constant_terms", {})
    key = tuple(term_symbols(t))
    if key not in cache:
        table = s.fn_tables[key[0]]
        for f in key[1:]:
            table = s.fn_tables[f][table]
        cache[key] = int(table[0]) if (table == table[0]).all() else None
    return cache[key]


def fold_constants(s: FunctionalStructure, clause: ConjClause) -> ConjClause | None:
    """Simplify literals whose terms are constant on ``s``; None if one is false.

    Decided literals are dropped and an equation between a constant term and
    a term over ``z`` is respelled with ``z``, so it becomes a literal over
    ``z`` alone.
    """
    out = ConjClause()
    for a, v in clause.items():
        terms = atom_terms(a)
        consts = [_constant_value(s, t) for t in terms]
        if isinstance(a, Pred) and consts[0] is not None:
            truth = bool(s.predicates[a.name][consts[0]])
        elif isinstance(a, Eq) and None not in consts:
            truth = consts[0] == consts[1]
        elif isinstance(a, Eq) and consts.count(None) == 1:
            c, other = (a.left, a.right) if consts[0] is not None else (a.right, a.left)
            a = eq(build_term(term_vars(other), term_symbols(c)), other)
            truth = True if isinstance(a, Top) else False if isinstance(a, Bottom) else None
        else:
            truth = None
        if truth is None:
            out = out.add(a, v)
            if out is None:
                return None
        elif truth != v:
            return None
    return out


def apply(fn: str, t):
    return t if fn == IDENTITY else App(fn, t)


# ---------------------------------------------------------------- masks on a structure

def atom_mask(s: FunctionalStructure, atom: Formula) -> np.ndarray:
    """Truth of a single-variable atom at every vertex."""
    cache = s.cache.setdefault("atom_mask", {})
    got = cache.get(atom)
    if got is None:
        names = {term_vars(t) for t in atom_terms(atom)}
        if len(names) > 1:
            raise ShapeError(f"atom {atom} is not over a single variable")
        env = {v: np.arange(s.universe_size) for v in names}
        got = np.broadcast_to(evaluate(atom, s, env), (s.universe_size,))
        cache[atom] = got
    return got


def clause_mask(s: FunctionalStructure, clause: ConjClause) -> np.ndarray:
    cache = s.cache.setdefault("clause_mask", {})
    got = cache.get(clause)
    if got is None:
        got = np.ones(s.universe_size, dtype=bool)
        for a, v in clause.items():
            m = atom_mask(s, a)
            got = got & (m if v else ~m)
        cache[clause] = got
    return got


# ---------------------------------------------------------------- clauses

@dataclass(frozen=True)
class Mixed:
    """The mixed atom ``f(y) = g(x_i)``; ``i`` indexes the tuple ``xs``."""

    f: str
    g: str
    i: int

    def atom(self, y: str, xs: Sequence[str]) -> Formula:
        return eq(apply(self.f, Var(y)), apply(self.g, Var(xs[self.i])))


@dataclass(frozen=True)
class CanonicalClause:
    y: str
    xs: tuple
    tau: ConjClause
    psi: ConjClause
    delta_eq: tuple
    delta_neq: tuple = ()

    @property
    def k(self) -> int:
        return len(self.xs)

    def formula(self) -> Formula:
        parts = [self.tau.formula(), self.psi.formula()]
        parts += [m.atom(self.y, self.xs) for m in self.delta_eq]
        parts += [neg(m.atom(self.y, self.xs)) for m in self.delta_neq]
        return conj(parts)

    def dump(self) -> str:
        def mixed(m, sign):
            return f"{m.f}({self.y}) {sign} {m.g}({self.xs[m.i]})"
        eqs = ", ".join(mixed(m, "=") for m in self.delta_eq)
        neqs = ", ".join(mixed(m, "!=") for m in self.delta_neq)
        return f"tau: {self.tau} | psi: {self.psi} | eq: [{eqs}] | neq: [{neqs}]"


def _split_mixed(atom: Eq, y: str, xs: Sequence[str]) -> Mixed | None:
    """Read ``atom`` as ``f(y) = g(x_i)`` with depth-one sides, if it is mixed."""
    lv, rv = term_vars(atom.left), term_vars(atom.right)
    if (lv == y) == (rv == y):
        return None
    ty, tx = (atom.left, atom.right) if lv == y else (atom.right, atom.left)
    fs, gs = term_symbols(ty), term_symbols(tx)
    if len(fs) > 1 or len(gs) > 1:
        raise ShapeError(f"mixed literal {atom} has depth above one")
    return Mixed(fs[0] if fs else IDENTITY, gs[0] if gs else IDENTITY, xs.index(term_vars(tx)))


def _alive_factory(s, y, xs):
    if s is None:
        return None

    def alive(clause: ConjClause) -> bool:
        by_var: dict[str, list] = {}
        for a, v in clause.items():
            names = {term_vars(t) for t in atom_terms(a)}
            if len(names) == 1:
                by_var.setdefault(names.pop(), []).append((a, v))
        for lits in by_var.values():
            if not clause_mask(s, ConjClause(lits)).any():
                return False
        return True

    return alive


def canonicalize(phi: Formula, y: str, xs: Sequence[str],
                 s: FunctionalStructure | None = None) -> list[CanonicalClause]:
    """Mutually exclusive canonical clauses whose disjunction is ``phi``.

    ``phi`` must have depth at most one, and every clause must receive a
    positive mixed literal; callers conjoin ``apx(y) = apx(x_1)`` to ensure
    it.  With a structure, branches whose single-variable part is empty on
    it are pruned.
    """
    xs = tuple(xs)
    if formula_depth(phi) > 1:
        raise ShapeError("canonicalize requires functional depth at most one")
    extra = free_vars(phi) - {y} - set(xs)
    if extra:
        raise ShapeError(f"unexpected free variables {sorted(extra)}")
    norm = Normalizer.of(s)
    phi = norm.formula(phi)
    out = []
    for clause in exclusive_dnf(phi, alive=_alive_factory(s, y, xs)):
        tau, psi = [], []
        d_eq, d_neq = [], []
        for a, v in clause.items():
            names = {term_vars(t) for t in atom_terms(a)}
            if names == {y}:
                tau.append((a, v))
            elif y not in names:
                psi.append((a, v))
            else:
                m = _split_mixed(a, y, xs)
                (d_eq if v else d_neq).append(m)
        if not d_eq:
            raise ContractError("clause without a positive mixed literal; conjoin the apex literal")
        out.append(CanonicalClause(y, xs, ConjClause(tau), ConjClause(psi),
                                   tuple(sorted(set(d_eq), key=_mkey)),
                                   tuple(sorted(set(d_neq), key=_mkey))))
    return out


def _mkey(m: Mixed):
    return (m.i, m.f, m.g)


def _probe(f: str, h: str, f2: str, y: str, norm: Normalizer) -> Formula:
    """The ``tau``-atom ``h(f(y)) = f2(y)`` in normal form."""
    return norm.atom(Eq(apply(h, apply(f, Var(y))), apply(f2, Var(y))))


def _psi_atom(g: str, h: str, i: int, g2: str, j: int, xs, norm: Normalizer) -> Formula:
    """The ``psi``-atom ``h(g(x_i)) = g2(x_j)`` in normal form."""
    return norm.atom(Eq(apply(h, apply(g, Var(xs[i]))), apply(g2, Var(xs[j]))))


def _case_split(c: CanonicalClause, candidates: list[Formula], s: FunctionalStructure | None):
    """Split ``c.tau`` on a list of ``tau``-atoms.

    Yields ``(tau', j)`` meaning candidate ``j`` is true in ``tau'`` (and all
    earlier-chosen ones are false), or ``(tau', None)`` meaning every
    candidate is false.  Already decided candidates are respected.  The
    branches are mutually exclusive and cover ``tau``.
    """
    for j, a in enumerate(candidates):
        if isinstance(a, Top) or c.tau.value(a) is True:
            yield c.tau, j
            return
    open_ = [j for j, a in enumerate(candidates)
             if not isinstance(a, Bottom) and c.tau.value(a) is None]
    if s is None:
        tau = c.tau
        for j in open_:
            yield tau.add(candidates[j], True), j
            tau = tau.add(candidates[j], False)
        yield tau, None
        return
    remaining = clause_mask(s, c.tau)
    masks = {j: atom_mask(s, candidates[j]) for j in open_}
    tau = c.tau
    negated = []
    while remaining.any():
        best, cover = None, 0
        for j in open_:
            cnt = int(np.count_nonzero(masks[j] & remaining))
            if cnt > cover:
                best, cover = j, cnt
        if best is None:
            break
        yield tau.add(candidates[best], True), best
        tau = tau.add(candidates[best], False)
        negated.append(best)
        remaining = remaining & ~masks[best]
        open_.remove(best)
    if remaining.any():
        for j in open_:
            tau = tau.add(candidates[j], False)
        yield tau, None


def reduce_delta_eq(c: CanonicalClause, s: FunctionalStructure | None = None,
                    probes: Sequence[str] | None = None) -> list[CanonicalClause]:
    """Reduce ``delta_eq`` to a single literal (empty result means unsatisfiable).

    Two positive literals ``f(y) = g(x_i)`` and ``f'(y) = g'(x_j)`` force
    their ``y``-sides to be joined by an arc (fraternity), so ``tau`` decides
    some ``h(f(y)) = f'(y)`` or ``f(y) = h(f'(y))``; given that, one of the two
    literals follows from the other and a ``psi``-literal and is dropped.
    """
    norm = Normalizer.of(s)
    probes = list(probes) if probes is not None else norm.representatives()
    done = []
    work = [c]
    while work:
        c = work.pop()
        if len(c.delta_eq) <= 1:
            done.append(c)
            continue
        a, b = c.delta_eq[0], c.delta_eq[1]
        cands, moves = [], []
        for h in probes:
            cands.append(_probe(a.f, h, b.f, c.y, norm))
            moves.append((1, h))
            cands.append(norm.atom(Eq(apply(a.f, Var(c.y)), apply(h, apply(b.f, Var(c.y))))))
            moves.append((2, h))
        for tau, j in _case_split(c, cands, s):
            if j is None:
                if s is not None:
                    raise ContractError(
                        "two positive mixed literals with unrelated y-sides; "
                        "the structure is not fraternally augmented for these symbols")
                continue  # unsatisfiable on augmented structures
            direction, h = moves[j]
            if direction == 1:
                lit = _psi_atom(a.g, h, a.i, b.g, b.i, c.xs, norm)
                keep = tuple(m for m in c.delta_eq if m != b)
            else:
                lit = _psi_atom(b.g, h, b.i, a.g, a.i, c.xs, norm)
                keep = tuple(m for m in c.delta_eq if m != a)
            psi = c.psi.add(lit, True)
            if psi is None:
                continue
            work.append(replace(c, tau=tau, psi=psi, delta_eq=keep))
    return done


def prune_delta_neq(c: CanonicalClause, s: FunctionalStructure | None = None,
                    probes: Sequence[str] | None = None) -> list[CanonicalClause]:
    """Drop the negative mixed literals that ``psi`` decides.

    With ``delta_eq = {f(y) = g(x_i)}``, a literal ``f'(y) != g'(x_j)`` is
    removable as soon as ``tau`` contains ``h(f(y)) = f'(y)`` for some ``h``: it
    then agrees with ``h(g(x_i)) != g'(x_j)``.  Surviving literals have
    ``h(f(y)) != f'(y)`` in ``tau`` for every probed ``h``.
    """
    if len(c.delta_eq) != 1:
        raise ContractError("prune_delta_neq needs exactly one positive mixed literal")
    norm = Normalizer.of(s)
    probes = list(probes) if probes is not None else norm.representatives()
    (a,) = c.delta_eq
    done = []
    work = [(c, 0)]
    while work:
        c, pos = work.pop()
        if pos >= len(c.delta_neq):
            done.append(c)
            continue
        b = c.delta_neq[pos]
        cands = [_probe(a.f, h, b.f, c.y, norm) for h in probes]
        for tau, j in _case_split(c, cands, s):
            if j is None:
                work.append((replace(c, tau=tau), pos + 1))
                continue
            lit = _psi_atom(a.g, probes[j], a.i, b.g, b.i, c.xs, norm)
            psi = c.psi.add(lit, False)
            if psi is None:
                continue
            rest = c.delta_neq[:pos] + c.delta_neq[pos + 1:]
            work.append((replace(c, tau=tau, psi=psi, delta_neq=rest), pos))
    return done


# ---------------------------------------------------------------- sign-vector types

@dataclass
class TypeTree:
    """Decision tree over atoms whose leaves are sign-vector descriptors."""

    atom: Formula | None = None
    high: "TypeTree | None" = None
    low: "TypeTree | None" = None
    leaf: int | None = None

    def formula(self, leaves: Sequence[Formula]) -> Formula:
        if self.leaf is not None:
            return leaves[self.leaf]
        return ite(self.atom, self.high.formula(leaves), self.low.formula(leaves))

    def conditions(self, count: int) -> list[Formula]:
        paths: list[list[Formula]] = [[] for _ in range(count)]

        def go(node, acc):
            if node.leaf is not None:
                paths[node.leaf].append(conj(acc))
                return
            go(node.high, acc + [node.atom])
            go(node.low, acc + [neg(node.atom)])

        go(self, [])
        from .logic import disj
        return [disj(p) for p in paths]

    def locate(self, s: FunctionalStructure, env) -> np.ndarray:
        """Descriptor index for every tuple given by ``env``."""
        if self.leaf is not None:
            shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
            return np.full(shape, self.leaf, dtype=np.int64)
        test = evaluate(self.atom, s, env)
        return np.where(test, self.high.locate(s, env), self.low.locate(s, env))


@dataclass
class TypeDescriptors:
    psis: tuple
    vectors: list
    tree: TypeTree

    def __len__(self) -> int:
        return len(self.vectors)

    def conditions(self) -> list[Formula]:
        return self.tree.conditions(len(self.vectors))


def _variables(atom: Formula) -> set:
    return {term_vars(t) for t in atom_terms(atom)}


class _Rewriter:
    """Equations decided true along a tree path, used to respell later atoms.

    An equation ``z = t`` with ``z`` a bare variable not occurring in ``t``
    substitutes ``t`` for ``z``; any other equation rewrites its left side
    to its right side wherever that side occurs as a whole term.
    """

    def __init__(self, norm: Normalizer, subst=(), sides=()):
        self.norm = norm
        self.subst = dict(subst)
        self.sides = dict(sides)
        self._memo: dict[Formula, Formula] = {}

    def learn(self, atom: Formula) -> "_Rewriter":
        if not isinstance(atom, Eq) or term_vars(atom.left) == term_vars(atom.right):
            return self
        subst, sides = dict(self.subst), dict(self.sides)
        left, right = atom.left, atom.right
        if isinstance(right, Var) and not isinstance(left, Var):
            left, right = right, left
        if isinstance(left, Var):
            subst[left.name] = right
        else:
            sides[left] = right
        return _Rewriter(self.norm, subst, sides)

    def _term(self, t):
        for _ in range(4):
            old = t
            t = self.sides.get(t, t)
            name = term_vars(t)
            if name in self.subst:
                t = self.norm.term(subst_term(t, self.subst))
            if t == old:
                break
        return t

    def atom(self, a: Formula) -> Formula:
        got = self._memo.get(a)
        if got is None:
            if isinstance(a, Eq):
                got = eq(self._term(a.left), self._term(a.right))
            elif isinstance(a, Pred):
                got = Pred(a.name, self._term(a.term))
            else:
                got = a
            self._memo[a] = got
        return got


def _join(s: FunctionalStructure, atom: Eq, masks: dict, names: Sequence[str], limit: int):
    """All tuples over ``names`` satisfying ``atom`` and ``masks``, or None if more than ``limit``."""
    a, b = term_vars(atom.left), term_vars(atom.right)
    n = s.universe_size
    pick = {v: np.flatnonzero(masks[v]) if v in masks else np.arange(n) for v in names}
    la = eval_term(atom.left, s, {a: pick[a]})
    lb = eval_term(atom.right, s, {b: pick[b]})
    order = np.argsort(lb, kind="stable")
    sorted_b = lb[order]
    lo = np.searchsorted(sorted_b, la, "left")
    cnt = np.searchsorted(sorted_b, la, "right") - lo
    total = int(cnt.sum())
    others = [v for v in names if v not in (a, b)]
    for v in others:
        total *= len(pick[v])
    if total > limit:
        return None
    m = int(cnt.sum())
    starts = np.repeat(lo, cnt)
    offs = np.arange(m) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    rows = {a: np.repeat(pick[a], cnt), b: pick[b][order[starts + offs]]}
    for v in others:
        size = len(pick[v])
        rows = {u: np.repeat(col, size) for u, col in rows.items()}
        rows[v] = np.tile(pick[v], len(rows[a]) // size if size else 0)
    return rows


def sign_vector_types(psis: Sequence[ConjClause], budget: int = 1 << 16,
                      s: FunctionalStructure | None = None, limit: int = 1 << 16) -> TypeDescriptors:
    """Sign vectors over ``psis`` realised by a decision tree on their atoms.

    Every tuple reaches exactly one leaf; the leaf decides each ``psi``
    (true when all its literals hold).  Leaves with the same vector are
    merged into one descriptor.  Equations that hold on a path respell the
    atoms tested below it.

    With a structure, the tuples that can still reach a node are tracked,
    explicitly while there are at most ``limit`` of them and otherwise as a
    set of possible vertices per variable.  A test that no such tuple can
    fail (or pass) is skipped, so the tree only grows along realised paths.
    """
    psis = tuple(psis)
    vectors: dict[tuple, int] = {}
    order: list[tuple] = []
    count = [0]
    norm = Normalizer.of(s)
    names = sorted({v for p in psis for a in p.atoms() for v in _variables(a)})

    def verdict(p: ConjClause, assign: ConjClause, rw: _Rewriter, open_atoms: list):
        out = True
        for a, v in p.items():
            a = rw.atom(a)
            got = True if isinstance(a, Top) else False if isinstance(a, Bottom) else assign.value(a)
            if got is None:
                out = None
                open_atoms.append(a)
            elif got != v:
                return False
        return out

    def rank(a: Formula):
        bare = isinstance(a, Eq) and (isinstance(a.left, Var) or isinstance(a.right, Var))
        return (-len(_variables(a)), not bare)

    def split(atom: Formula, alive):
        """Tuples reaching the true and the false branch (None: unknown)."""
        kind, data = alive
        if kind == "rows":
            t = evaluate(atom, s, data)
            return ("rows", {v: c[t] for v, c in data.items()}), \
                   ("rows", {v: c[~t] for v, c in data.items()}), bool(t.any()), bool((~t).any())
        atom_names = _variables(atom)
        if len(atom_names) == 1:
            (z,) = atom_names
            m = atom_mask(s, atom)
            base = data.get(z)
            yes = m if base is None else base & m
            no = ~m if base is None else base & ~m
            return ("masks", {**data, z: yes}), ("masks", {**data, z: no}), \
                   bool(yes.any()), bool(no.any())
        rows = _join(s, atom, data, names, limit) if isinstance(atom, Eq) else None
        if rows is None:
            return alive, alive, True, True
        high = ("rows", rows)
        return high, alive, len(next(iter(rows.values()))) > 0, True

    def build(assign: ConjClause, rw: _Rewriter, undecided: list[int], decided: dict,
              alive) -> TypeTree:
        count[0] += 1
        if count[0] > budget:
            raise BudgetExceeded(f"more than {budget} type-tree nodes")
        state = dict(decided)
        still = []
        first_open: list = []
        for j in undecided:
            open_atoms: list = []
            got = verdict(psis[j], assign, rw, open_atoms)
            if got is None:
                still.append(j)
                if not first_open:
                    first_open = open_atoms
            else:
                state[j] = got
        if not still:
            vec = tuple(state[j] for j in range(len(psis)))
            if vec not in vectors:
                vectors[vec] = len(order)
                order.append(vec)
            return TypeTree(leaf=vectors[vec])
        atom = min(first_open, key=rank)

        def branch(value: bool, alive2) -> TypeTree:
            rw2 = rw.learn(atom) if value else rw
            return build(assign.add(atom, value), rw2, still, state, alive2)

        if alive is None:
            return TypeTree(atom=atom, high=branch(True, None), low=branch(False, None))
        high, low, can_hold, can_fail = split(atom, alive)
        if not can_hold:
            return branch(False, low)
        if not can_fail:
            return branch(True, high)
        return TypeTree(atom=atom, high=branch(True, high), low=branch(False, low))

    alive = None
    if s is not None and names:
        n = s.universe_size
        if n ** len(names) <= limit:
            grid = np.indices((n,) * len(names)).reshape(len(names), -1)
            alive = ("rows", {v: grid[j] for j, v in enumerate(names)})
        else:
            alive = ("masks", {})
    tree = build(ConjClause(), _Rewriter(norm), list(range(len(psis))), {}, alive)
    return TypeDescriptors(psis, order, tree)
