"""Counting-term decompositions.

A count ``#y phi(y, xs)`` is rewritten as a sum of simple terms
``mu * [psi(xs)] * |{v : tau(v) and f(v) = g(x_i)}|``.  In approximate mode
every sign ``mu`` is +1 and the sum over-counts by at most a factor
``1 + eps``; in exact mode inclusion-exclusion yields signed terms whose sum
is the count itself.  Summing the terms per position gives one integer
weight per vertex, per position, per sign-vector type of ``xs``.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .clauses import (CanonicalClause, Normalizer, TypeDescriptors, atom_mask, canonicalize,
                      clause_mask, fold_constants, prune_delta_neq, reduce_delta_eq, sign_vector_types)
from .errors import ContractError, ShapeError
from .graph import APEX, FLIP, IDENTITY, FunctionalStructure, add_apex, augment, flip
from .logic import (App, Formula, Var, atom_terms, conj, counting_atoms, eq, evaluate,
                    free_vars, function_symbols, is_quantifier_free, term_vars, walk)
from .normal import ConjClause, reduce_depth

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TripleList:
    """Triples ``(u, u2, c)`` sorted by ``(u, u2)``; stored column-wise."""

    u: np.ndarray
    u2: np.ndarray
    c: np.ndarray

    def __len__(self) -> int:
        return len(self.c)

    def __iter__(self):
        return zip(self.u.tolist(), self.u2.tolist(), self.c.tolist())

    def as_dict(self) -> dict:
        return {(a, b): c for a, b, c in self}


def count_pairs(s: FunctionalStructure, tau: ConjClause, f: str, f2: str) -> TripleList:
    """All ``(u, u2, c)`` with ``c = |{v : tau(v), f(v) = u, f2(v) = u2}| > 0``."""
    n = s.universe_size
    mask = clause_mask(s, tau)
    u = s.fn_tables[f][mask]
    u2 = s.fn_tables[f2][mask]
    codes, counts = np.unique(u * np.int64(n) + u2, return_counts=True)
    return TripleList(codes // n if n else codes, codes % n if n else codes, counts.astype(np.int64))


def count_single(s: FunctionalStructure, tau: ConjClause, f: str) -> np.ndarray:
    """``v -> |{w : tau(w), f(w) = v}|`` for every vertex ``v``."""
    mask = clause_mask(s, tau)
    return np.bincount(s.fn_tables[f][mask], minlength=s.universe_size).astype(np.int64)


def technical_epsilon(eps, t: int) -> Fraction:
    """The per-literal slack ``min(1, eps) / (2 t)`` that keeps ``t`` dropped literals within ``1 + eps``."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ContractError("epsilon must be positive")
    return min(Fraction(1), eps) / (2 * max(int(t), 1))


# ---------------------------------------------------------------- sums of simple terms

@dataclass(frozen=True)
class Entry:
    mu: int
    tau: ConjClause
    psi: ConjClause
    f: str
    g: str
    i: int


@dataclass
class SimpleClauseSum:
    y: str
    xs: tuple
    entries: list
    mode: str  # "approx" or "exact"
    epsilon: Fraction | None = None
    flip_epsilon: Fraction | None = None
    live_clauses: list = field(default_factory=list)

    def __post_init__(self):
        if self.mode == "approx" and any(e.mu != 1 for e in self.entries):
            raise ContractError("approximate sums have only positive entries")

    def evaluate(self, s: FunctionalStructure, tuples: np.ndarray) -> np.ndarray:
        """Value of the sum at each row of ``tuples`` (shape ``(m, k)``)."""
        tuples = np.asarray(tuples, dtype=np.int64).reshape(-1, len(self.xs))
        env = {x: tuples[:, j] for j, x in enumerate(self.xs)}
        total = np.zeros(len(tuples), dtype=np.int64)
        for e in self.entries:
            ok = evaluate(e.psi.formula(), s, env) if len(e.psi) else np.ones(len(tuples), bool)
            counts = count_single(s, e.tau, e.f)
            total += e.mu * ok * counts[s.fn_tables[e.g][tuples[:, e.i]]]
        return total


def _find_apex(s: FunctionalStructure) -> str | None:
    for f in s.signature.function_symbols:
        if s.signature.provenance.get(f) == APEX and not s.fn_tables[f].any():
            return f
    return None


def _setup(s: FunctionalStructure, phi: Formula, y: str, xs: Sequence[str]):
    """Apex, depth reduction, augmentation, canonical clauses and single ``delta_eq``."""
    if not is_quantifier_free(phi):
        raise ShapeError("decomposition needs a quantifier-free body here")
    extra = free_vars(phi) - {y} - set(xs)
    if extra:
        raise ShapeError(f"unexpected free variables {sorted(extra)}")
    if not xs:
        raise ShapeError("at least one free variable besides the counted one is required")
    if s.universe_size == 0:
        return s, []
    apx = _find_apex(s)
    if apx is None:
        s = add_apex(s)
        apx = s.signature.function_symbols[-1]
    body = conj([phi, eq(App(apx, Var(y)), App(apx, Var(xs[0])))])
    body, s = reduce_depth(body, s)
    sigma = sorted(function_symbols(body) - {IDENTITY} | {apx})
    s = augment(s, sigma)
    clauses = canonicalize(body, y, xs, s)
    reduced = []
    for c in clauses:
        reduced.extend(reduce_delta_eq(c, s))
    return s, reduced


def flip_violations(s: FunctionalStructure, clauses: Iterable[CanonicalClause], eps1: Fraction,
                    skip_present: bool = True):
    """Pairs ``(u, u2)`` with ``count(tau, f, f2)(u, u2) > eps1 * count(tau, f)(u)``.

    Combinations ``(tau, f, f2)`` range over each clause's ``tau``, its
    positive mixed literal ``f`` and its negative ones ``f2``.  With
    ``skip_present`` pairs that already have an arc ``u2 -> u`` are omitted.
    """
    eps1 = Fraction(eps1)
    n = s.universe_size
    combos = set()
    for c in clauses:
        if len(c.delta_eq) != 1:
            raise ContractError("flip preparation needs a single positive mixed literal")
        (a,) = c.delta_eq
        for b in c.delta_neq:
            combos.add((c.tau, a.f, b.f))
    found = set()
    for tau, f, f2 in combos:
        triples = count_pairs(s, tau, f, f2)
        if not len(triples):
            continue
        single = count_single(s, tau, f)
        bad = triples.c * eps1.denominator > eps1.numerator * single[triples.u]
        for u, u2 in zip(triples.u[bad].tolist(), triples.u2[bad].tolist()):
            if u != u2:
                found.add((u, u2))
    if skip_present and found:
        arcs = s.arc_codes()
        pairs = sorted(found)
        codes = np.array([u2 * n + u for u, u2 in pairs], dtype=np.int64)
        present = np.isin(codes, arcs)
        found = {p for p, ok in zip(pairs, present) if not ok}
    return found


def prepare_flips(s: FunctionalStructure, clauses: Iterable[CanonicalClause], eps1) -> FunctionalStructure:
    """Flip arcs so every heavy pair of the given combinations has an arc ``u2 -> u``.

    Requests sharing a head are spread over several flip rounds, one new
    symbol per round.  Returns ``s`` itself when nothing needs flipping.
    """
    eps1 = Fraction(eps1)
    if eps1 <= 0:
        raise ContractError("epsilon' must be positive")
    requests = flip_violations(s, clauses, eps1)
    if not requests:
        return s
    by_head = defaultdict(list)
    for u, u2 in sorted(requests):
        by_head[u].append(u2)
    rounds = max(len(v) for v in by_head.values())
    for r in range(rounds):
        batch = [(u, tails[r]) for u, tails in by_head.items() if r < len(tails)]
        s = flip(s, batch)
    logger.debug("prepare_flips: %d arcs in %d rounds", len(requests), rounds)
    return s


def approx_decompose(s: FunctionalStructure, phi: Formula, eps, y: str = "y",
                     xs: Sequence[str] | None = None,
                     max_rounds: int = 64) -> tuple[FunctionalStructure, SimpleClauseSum]:
    """Positive sum with ``count <= sum <= (1 + eps) * count`` at every tuple."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ContractError("epsilon must be positive")
    xs = tuple(sorted(free_vars(phi) - {y})) if xs is None else tuple(xs)
    s, clauses = _setup(s, phi, y, xs)
    pruned = []
    for c in clauses:
        pruned.extend(prune_delta_neq(c, s))
    t = max((len(c.delta_neq) for c in pruned), default=0)
    eps1 = technical_epsilon(eps, t)
    done = [c for c in pruned if not c.delta_neq]
    live = [c for c in pruned if c.delta_neq]
    rounds = 0
    while live:
        rounds += 1
        if rounds > max_rounds:
            raise ContractError(f"flip preparation did not settle after {max_rounds} rounds")
        before = set(s.signature.function_symbols)
        s2 = prepare_flips(s, live, eps1)
        if s2 is s:
            break
        s = s2
        norm = Normalizer.of(s)
        new = [f for f in norm.representatives() if f not in before]
        nxt = []
        for c in live:
            nxt.extend(prune_delta_neq(c, s, probes=new))
        done.extend(c for c in nxt if not c.delta_neq)
        live = [c for c in nxt if c.delta_neq]
    entries = []
    for c in done + live:
        (a,) = c.delta_eq
        entries.append(Entry(1, c.tau, c.psi, a.f, a.g, a.i))
    return s, SimpleClauseSum(y, xs, entries, "approx", eps, eps1, live)


def exact_decompose(s: FunctionalStructure, phi: Formula, y: str = "y",
                    xs: Sequence[str] | None = None) -> tuple[FunctionalStructure, SimpleClauseSum]:
    """Signed sum equal to ``#y phi`` at every tuple (inclusion-exclusion on ``delta_neq``).

    First-order quantifiers inside ``phi`` are eliminated first.
    """
    if counting_atoms(phi):
        raise ShapeError("exact decomposition does not accept counting atoms in the body")
    xs = tuple(sorted(free_vars(phi) - {y})) if xs is None else tuple(xs)
    if not is_quantifier_free(phi):
        from .qe import eliminate_fo
        s, phi = eliminate_fo(s, phi, anchor=y)
    s, clauses = _setup(s, phi, y, xs)
    entries = []
    for c in clauses:
        for c2 in prune_delta_neq(c, s):
            signed = [(1, c2.delta_eq)]
            for b in c2.delta_neq:
                signed = [item for mu, eqs in signed for item in ((mu, eqs), (-mu, eqs + (b,)))]
            for mu, eqs in signed:
                for c3 in reduce_delta_eq(replace(c2, delta_eq=eqs, delta_neq=()), s):
                    (a,) = c3.delta_eq
                    entries.append(Entry(mu, c3.tau, c3.psi, a.f, a.g, a.i))
    return s, SimpleClauseSum(y, xs, entries, "exact")


# ---------------------------------------------------------------- weights

@dataclass
class WeightTable:
    """Per-descriptor, per-position vertex weights, array of shape ``(D, k, n)``."""

    xs: tuple
    descriptors: TypeDescriptors
    weights: np.ndarray
    mode: str
    epsilon: Fraction | None = None

    def descriptor_at(self, s: FunctionalStructure, tuples: np.ndarray) -> np.ndarray:
        tuples = np.asarray(tuples, dtype=np.int64).reshape(-1, len(self.xs))
        env = {x: tuples[:, j] for j, x in enumerate(self.xs)}
        return self.descriptors.tree.locate(s, env)

    def total(self, s: FunctionalStructure, tuples: np.ndarray) -> np.ndarray:
        tuples = np.asarray(tuples, dtype=np.int64).reshape(-1, len(self.xs))
        d = self.descriptor_at(s, tuples)
        out = np.zeros(len(tuples), dtype=np.int64)
        for j in range(len(self.xs)):
            out += self.weights[d, j, tuples[:, j]]
        return out

    def to_csv(self) -> str:
        lines = ["vertex,descriptor,position,weight"]
        D, k, n = self.weights.shape
        for d in range(D):
            for j in range(k):
                for v in range(n):
                    lines.append(f"{v},{d},{j},{int(self.weights[d, j, v])}")
        return "\n".join(lines) + "\n"


def _fold(psi: ConjClause, var: str) -> tuple[ConjClause, ConjClause]:
    """Split ``psi`` into the literals over ``var`` alone and the rest."""
    own, rest = [], []
    for a, v in psi.items():
        names = {term_vars(t) for t in atom_terms(a)}
        (own if names == {var} else rest).append((a, v))
    return ConjClause(own), ConjClause(rest)


def build_weights(s: FunctionalStructure, total: SimpleClauseSum) -> WeightTable:
    n = s.universe_size
    k = len(total.xs)
    parts = []
    chis: dict[ConjClause, int] = {}
    for e in total.entries:
        psi = fold_constants(s, e.psi)
        if psi is None:
            continue
        own, rest = _fold(psi, total.xs[e.i])
        j = None
        if len(rest):
            j = chis.setdefault(rest, len(chis))
        parts.append((e, own, j))
    psis = sorted(chis, key=chis.get)
    types = sign_vector_types(psis, s=s)
    weights = np.zeros((len(types), k, n), dtype=np.int64)
    cache = {}
    for e, own, j in parts:
        key = (e.tau, e.f, e.g, own)
        contrib = cache.get(key)
        if contrib is None:
            counts = count_single(s, e.tau, e.f)
            contrib = counts[s.fn_tables[e.g]]
            if len(own):
                contrib = contrib * clause_mask(s, own)
            cache[key] = contrib
        for d, vec in enumerate(types.vectors):
            if j is None or vec[j]:
                weights[d, e.i] += e.mu * contrib
    if total.mode == "approx" and (weights < 0).any():
        raise ContractError("negative weight in approximate mode")
    return WeightTable(total.xs, types, weights, total.mode, total.epsilon)


def approx_weights(s: FunctionalStructure, phi: Formula, eps, y: str = "y",
                   xs: Sequence[str] | None = None):
    s, total = approx_decompose(s, phi, eps, y, xs)
    table = build_weights(s, total)
    return s, table.descriptors, table


def exact_weights(s: FunctionalStructure, phi: Formula, y: str = "y",
                  xs: Sequence[str] | None = None):
    s, total = exact_decompose(s, phi, y, xs)
    table = build_weights(s, total)
    return s, table.descriptors, table
