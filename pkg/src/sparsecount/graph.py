"""Labeled graphs and their functional representations.

A sparse graph is encoded as a structure of unary functions: after orienting
the edges so that every vertex has few in-neighbours, slot ``f_j`` sends a
vertex to its ``j``-th in-neighbour (or to itself when the slot is unused).
Augmentations add named composite functions (transitive arcs), fraternal
functions and flip functions on top of such an encoding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .errors import ContractError, GraphFormatError

logger = logging.getLogger(__name__)

IDENTITY = "id"

ORIGINAL = "original"
TRANSITIVE = "transitive"
FRATERNAL = "fraternal"
FLIP = "flip"
APEX = "apex"
PROVENANCE_TAGS = (ORIGINAL, TRANSITIVE, FRATERNAL, FLIP, APEX)


@dataclass(frozen=True)
class LabeledGraph:
    """Undirected simple graph on ``0..vertex_count-1`` with vertex labels."""

    vertex_count: int
    edges: frozenset = frozenset()
    labels: Mapping[str, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        n = self.vertex_count
        if n < 0:
            raise ValueError("vertex_count must be nonnegative")
        edges = frozenset((min(u, v), max(u, v)) for u, v in self.edges)
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range")
        labels = {}
        for name, members in self.labels.items():
            members = frozenset(int(v) for v in members)
            for v in members:
                if not 0 <= v < n:
                    raise ValueError(f"label {name!r} on out-of-range vertex {v}")
            labels[name] = members
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "labels", MappingProxyType(labels))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.vertex_count, self.vertex_count), dtype=bool)
        for u, v in self.edges:
            a[u, v] = a[v, u] = True
        return a

    def label_mask(self, name: str) -> np.ndarray:
        mask = np.zeros(self.vertex_count, dtype=bool)
        members = self.labels.get(name)
        if members:
            mask[list(members)] = True
        return mask


def load_graph(text: str) -> LabeledGraph:
    """Parse the line-based graph format (``v <id> [labels]``, ``e <u> <v>``)."""
    count = 0
    edges: set[tuple[int, int]] = set()
    labels: dict[str, set[int]] = {}

    def vertex_id(token: str, lineno: int) -> int:
        try:
            value = int(token)
        except ValueError:
            raise GraphFormatError(f"bad vertex id {token!r}", lineno) from None
        if value < 0:
            raise GraphFormatError(f"negative vertex id {value}", lineno)
        return value

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "v":
            if len(parts) < 2:
                raise GraphFormatError("vertex line needs an id", lineno)
            v = vertex_id(parts[1], lineno)
            if v != count:
                raise GraphFormatError(
                    f"vertex ids must be dense and declared in order; expected {count}, got {v}",
                    lineno,
                )
            count += 1
            for label in parts[2:]:
                labels.setdefault(label, set()).add(v)
        elif kind == "e":
            if len(parts) != 3:
                raise GraphFormatError("edge line needs exactly two ids", lineno)
            u, v = vertex_id(parts[1], lineno), vertex_id(parts[2], lineno)
            for w in (u, v):
                if w >= count:
                    raise GraphFormatError(f"vertex id {w} out of range (declared: {count})", lineno)
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {u}", lineno)
            key = (min(u, v), max(u, v))
            if key in edges:
                raise GraphFormatError(f"duplicate edge {u} {v}", lineno)
            edges.add(key)
        else:
            raise GraphFormatError(f"unknown line type {kind!r}", lineno)
    return LabeledGraph(count, frozenset(edges), {k: frozenset(s) for k, s in labels.items()})


def dump_graph(g: LabeledGraph) -> str:
    lines = []
    by_vertex: dict[int, list[str]] = {}
    for name in sorted(g.labels):
        for v in g.labels[name]:
            by_vertex.setdefault(v, []).append(name)
    for v in range(g.vertex_count):
        lines.append(" ".join(["v", str(v), *by_vertex.get(v, [])]))
    for u, v in sorted(g.edges):
        lines.append(f"e {u} {v}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Signature:
    function_symbols: tuple
    predicate_symbols: tuple
    composite_index: Mapping = field(default_factory=dict)
    provenance: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.function_symbols.count(IDENTITY) != 1:
            raise ValueError("identity symbol must appear exactly once")
        if len(set(self.function_symbols)) != len(self.function_symbols):
            raise ValueError("duplicate function symbol")
        targets = list(self.composite_index.values())
        if len(set(targets)) != len(targets):
            raise ValueError("composite_index is not injective")
        for t in targets:
            if t not in self.function_symbols:
                raise ValueError(f"composite {t!r} is not a function symbol")
        object.__setattr__(self, "composite_index", MappingProxyType(dict(self.composite_index)))
        object.__setattr__(self, "provenance", MappingProxyType(dict(self.provenance)))

    def symbols_with(self, *tags: str) -> tuple:
        return tuple(f for f in self.function_symbols if self.provenance.get(f) in tags)


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


class FunctionalStructure:
    """Universe ``0..n-1`` with total unary function tables and unary predicates.

    Instances are immutable; the ``with_*`` methods return expansions.  A
    per-instance cache is available to evaluators through :attr:`cache`.
    """

    def __init__(self, signature: Signature, universe_size: int,
                 fn_tables: Mapping[str, np.ndarray], predicates: Mapping[str, np.ndarray]):
        n = universe_size
        tables = {}
        for f in signature.function_symbols:
            if f == IDENTITY and f not in fn_tables:
                tables[f] = _frozen(np.arange(n), np.int64)
                continue
            t = _frozen(fn_tables[f], np.int64)
            if t.shape != (n,) or (n and (t.min() < 0 or t.max() >= n)):
                raise ValueError(f"function table {f!r} is not a total map on the universe")
            tables[f] = t
        preds = {}
        for p in signature.predicate_symbols:
            m = _frozen(predicates[p], bool)
            if m.shape != (n,):
                raise ValueError(f"predicate {p!r} has wrong shape")
            preds[p] = m
        if not np.array_equal(tables[IDENTITY], np.arange(n)):
            raise ValueError("identity table is not the identity")
        self.signature = signature
        self.universe_size = n
        self.fn_tables = MappingProxyType(tables)
        self.predicates = MappingProxyType(preds)
        self.cache: dict = {}

    def __repr__(self) -> str:
        return (f"FunctionalStructure(n={self.universe_size}, "
                f"functions={len(self.signature.function_symbols)}, "
                f"predicates={len(self.signature.predicate_symbols)})")

    def fresh_name(self, prefix: str) -> str:
        taken = set(self.signature.function_symbols) | set(self.signature.predicate_symbols)
        i = 1
        while f"{prefix}{i}" in taken:
            i += 1
        return f"{prefix}{i}"

    def with_functions(self, new: Mapping[str, np.ndarray], tag: str,
                       composites: Mapping | None = None) -> "FunctionalStructure":
        sig = self.signature
        for f in new:
            if f in sig.function_symbols or f in sig.predicate_symbols:
                raise ValueError(f"symbol {f!r} already exists")
        prov = dict(sig.provenance)
        prov.update({f: tag for f in new})
        index = dict(sig.composite_index)
        index.update(composites or {})
        new_sig = Signature(sig.function_symbols + tuple(new), sig.predicate_symbols, index, prov)
        tables = dict(self.fn_tables)
        tables.update(new)
        return FunctionalStructure(new_sig, self.universe_size, tables, self.predicates)

    def with_predicates(self, new: Mapping[str, np.ndarray]) -> "FunctionalStructure":
        sig = self.signature
        for p in new:
            if p in sig.function_symbols or p in sig.predicate_symbols:
                raise ValueError(f"symbol {p!r} already exists")
        new_sig = Signature(sig.function_symbols, sig.predicate_symbols + tuple(new),
                            sig.composite_index, sig.provenance)
        preds = dict(self.predicates)
        preds.update(new)
        return FunctionalStructure(new_sig, self.universe_size, self.fn_tables, preds)

    def arc_codes(self, symbols: Iterable[str] | None = None) -> np.ndarray:
        """Sorted codes ``u * n + v`` of proper arcs ``u -> v`` (some ``f(v) = u != v``)."""
        n = self.universe_size
        names = self.signature.function_symbols if symbols is None else symbols
        v = np.arange(n, dtype=np.int64)
        chunks = []
        for f in names:
            t = self.fn_tables[f]
            mask = t != v
            chunks.append(t[mask] * n + v[mask])
        if not chunks:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(chunks))

    def arcs(self, symbols: Iterable[str] | None = None) -> set[tuple[int, int]]:
        n = self.universe_size
        return {(int(c // n), int(c % n)) for c in self.arc_codes(symbols)}

    def indegree(self) -> int:
        """Maximum number of distinct proper in-neighbours over all vertices."""
        n = self.universe_size
        if n == 0:
            return 0
        codes = self.arc_codes()
        if codes.size == 0:
            return 0
        return int(np.bincount(codes % n, minlength=n).max())

    def underlying_edges(self, symbols: Iterable[str] | None = None) -> set[tuple[int, int]]:
        return {(min(u, v), max(u, v)) for u, v in self.arcs(symbols)}


def degeneracy_order(n: int, adj: list[list[int]]) -> tuple[list[int], int]:
    """Smallest-last elimination order and the degeneracy, via a bucket queue."""
    degree = [len(a) for a in adj]
    maxdeg = max(degree, default=0)
    buckets: list[set[int]] = [set() for _ in range(maxdeg + 1)]
    for v in range(n):
        buckets[degree[v]].add(v)
    removed = [False] * n
    order = []
    degeneracy = 0
    low = 0
    for _ in range(n):
        while not buckets[low]:
            low += 1
        v = buckets[low].pop()
        degeneracy = max(degeneracy, low)
        removed[v] = True
        order.append(v)
        for w in adj[v]:
            if not removed[w]:
                d = degree[w]
                buckets[d].discard(w)
                degree[w] = d - 1
                buckets[d - 1].add(w)
        low = max(low - 1, 0)
    return order, degeneracy


def _slot_tables(n: int, in_lists: list[list[int]]) -> list[np.ndarray]:
    width = max((len(a) for a in in_lists), default=0)
    tables = [np.arange(n, dtype=np.int64) for _ in range(width)]
    for v, ins in enumerate(in_lists):
        for j, u in enumerate(sorted(ins)):
            tables[j][v] = u
    return tables


def orient(g: LabeledGraph) -> FunctionalStructure:
    """Degeneracy orientation of ``g`` as a functional structure.

    A vertex's in-neighbours are its neighbours that come later in the
    elimination order, so the indegree is at most the degeneracy.
    """
    n = g.vertex_count
    adj = g.neighbors()
    order, _ = degeneracy_order(n, adj)
    position = [0] * n
    for i, v in enumerate(order):
        position[v] = i
    in_lists = [[w for w in adj[v] if position[w] > position[v]] for v in range(n)]
    tables = _slot_tables(n, in_lists)
    names = [f"f{j + 1}" for j in range(len(tables))]
    label_names = tuple(sorted(g.labels))
    sig = Signature((IDENTITY, *names), label_names, {},
                    {IDENTITY: ORIGINAL, **{f: ORIGINAL for f in names}})
    return FunctionalStructure(sig, n, dict(zip(names, tables)),
                               {p: g.label_mask(p) for p in label_names})


def augment(s: FunctionalStructure, symbols: Iterable[str] | None = None) -> FunctionalStructure:
    """One round of transitive-fraternal augmentation.

    For every pair ``f, g`` of the chosen symbols (all symbols by default) the
    composite ``h_{f,g} = g . f`` is added (or reused through the composite
    index).  Pairs of vertices sharing an out-neighbour that are still
    unconnected get a fraternal arc, oriented by the degeneracy order of the
    demand graph and realised by fresh ``fraternal`` symbols.
    """
    n = s.universe_size
    sig = s.signature
    base = [f for f in (sig.function_symbols if symbols is None else symbols) if f != IDENTITY]
    for f in base:
        if f not in s.fn_tables:
            raise KeyError(f"unknown function symbol {f!r}")

    new_tables: dict[str, np.ndarray] = {}
    new_index: dict[tuple[str, str], str] = {}
    taken = set(sig.function_symbols) | set(sig.predicate_symbols)
    for f in base:
        for g in base:
            if (f, g) in sig.composite_index:
                continue
            name = f"h[{f},{g}]"
            while name in taken:
                name += "'"
            taken.add(name)
            new_tables[name] = s.fn_tables[g][s.fn_tables[f]]
            new_index[(f, g)] = name
    out = s.with_functions(new_tables, TRANSITIVE, new_index) if new_tables else s

    if n == 0 or not base:
        return out
    # fraternal demand: u = f(w), v = f'(w) distinct, both proper, not yet adjacent
    v_all = np.arange(n, dtype=np.int64)
    heads = [s.fn_tables[f] for f in base]
    pair_chunks = []
    for a in range(len(heads)):
        for b in range(a + 1, len(heads)):
            u, v = heads[a], heads[b]
            mask = (u != v_all) & (v != v_all) & (u != v)
            lo = np.minimum(u[mask], v[mask])
            hi = np.maximum(u[mask], v[mask])
            pair_chunks.append(lo * n + hi)
    if not pair_chunks:
        return out
    demand = np.unique(np.concatenate(pair_chunks))
    if demand.size == 0:
        return out
    arcs = out.arc_codes()
    lo, hi = demand // n, demand % n
    connected = np.isin(lo * n + hi, arcs) | np.isin(hi * n + lo, arcs)
    demand = demand[~connected]
    if demand.size == 0:
        return out
    adj: list[list[int]] = [[] for _ in range(n)]
    for code in demand.tolist():
        a, b = divmod(code, n)
        adj[a].append(b)
        adj[b].append(a)
    order, _ = degeneracy_order(n, adj)
    position = [0] * n
    for i, v in enumerate(order):
        position[v] = i
    in_lists = [[w for w in adj[v] if position[w] > position[v]] for v in range(n)]
    tables = _slot_tables(n, in_lists)
    fr = {}
    for t in tables:
        name = out.fresh_name("fr")
        while name in fr:
            name += "'"
        fr[name] = t
    logger.debug("augment: %d composites, %d fraternal symbols", len(new_tables), len(fr))
    return out.with_functions(fr, FRATERNAL)


def flip(s: FunctionalStructure, arcs: Iterable[tuple[int, int]]) -> FunctionalStructure:
    """Add the reverse of existing arcs; ``(u, w)`` realises ``w -> u`` via ``f_flip(u) = w``.

    The arc ``u -> w`` must already be present, and every head ``u`` may be
    requested once (split larger requests into several rounds).
    """
    n = s.universe_size
    table = np.arange(n, dtype=np.int64)
    requests = list(arcs)
    if requests:
        present = s.arc_codes()
        seen = set()
        for u, w in requests:
            if not (0 <= u < n and 0 <= w < n) or u == w:
                raise ContractError(f"flip request ({u}, {w}) is not a proper pair")
            if u in seen:
                raise ContractError(f"two flip requests share head {u}; split into rounds")
            seen.add(u)
        codes = np.array([u * n + w for u, w in requests], dtype=np.int64)
        missing = ~np.isin(codes, present)
        if missing.any():
            u, w = requests[int(np.argmax(missing))]
            raise ContractError(f"cannot flip: arc {u}->{w} is not present")
        for u, w in requests:
            table[u] = w
    return s.with_functions({s.fresh_name("flip"): table}, FLIP)


def add_apex(s: FunctionalStructure) -> FunctionalStructure:
    """Add a constant function onto vertex 0."""
    if s.universe_size == 0:
        raise ContractError("cannot add an apex to an empty universe")
    return s.with_functions({s.fresh_name("apx"): np.zeros(s.universe_size, dtype=np.int64)}, APEX)


def edge_formula(sig: Signature, x: str = "x", y: str = "y"):
    """The formula ``x != y and OR_f (f(x) = y or f(y) = x)`` over original slots."""
    from .logic import App, Eq, Not, Var, conj, disj

    vx, vy = Var(x), Var(y)
    parts = []
    for f in sig.function_symbols:
        if f == IDENTITY or sig.provenance.get(f) != ORIGINAL:
            continue
        parts.append(Eq(App(f, vx), vy))
        parts.append(Eq(App(f, vy), vx))
    return conj([Not(Eq(vx, vy)), disj(parts)])
