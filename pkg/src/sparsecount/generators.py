"""Deterministic graph families for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .graph import LabeledGraph


def _labels(n: int, names, rng: np.random.Generator | None, density: float = 0.4) -> dict:
    if rng is None or not names:
        return {}
    return {name: frozenset(np.flatnonzero(rng.random(n) < density).tolist()) for name in names}


def grid(width: int, height: int, labels=(), rng=None) -> LabeledGraph:
    edges = set()
    for r in range(height):
        for c in range(width):
            v = r * width + c
            if c + 1 < width:
                edges.add((v, v + 1))
            if r + 1 < height:
                edges.add((v, v + width))
    n = width * height
    return LabeledGraph(n, frozenset(edges), _labels(n, labels, rng))


def grid_with_vertices(n: int, labels=(), rng=None) -> LabeledGraph:
    """Grid with ``n`` vertices: as square as possible, last row partially filled."""
    if n <= 0:
        return LabeledGraph(0)
    width = max(1, int(round(n ** 0.5)))
    edges = set()
    for v in range(n):
        if (v + 1) % width and v + 1 < n:
            edges.add((v, v + 1))
        if v + width < n:
            edges.add((v, v + width))
    return LabeledGraph(n, frozenset(edges), _labels(n, labels, rng))


def path(n: int) -> LabeledGraph:
    return LabeledGraph(n, frozenset((i, i + 1) for i in range(n - 1)))


def cycle(n: int) -> LabeledGraph:
    if n < 3:
        return path(n)
    return LabeledGraph(n, frozenset({(i, (i + 1) % n) for i in range(n)}))


def star(leaves: int) -> LabeledGraph:
    """``K_{1,leaves}`` with centre 0."""
    return LabeledGraph(leaves + 1, frozenset((0, i) for i in range(1, leaves + 1)))


def complete(n: int) -> LabeledGraph:
    return LabeledGraph(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))


def random_tree(n: int, rng: np.random.Generator, labels=()) -> LabeledGraph:
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    return LabeledGraph(n, frozenset(edges), _labels(n, labels, rng))


def bounded_degree_random(n: int, max_degree: int, rng: np.random.Generator, labels=(),
                          attempts_per_vertex: int = 2) -> LabeledGraph:
    """Random graph with every degree at most ``max_degree``."""
    degree = np.zeros(n, dtype=np.int64)
    edges = set()
    for _ in range(attempts_per_vertex * n):
        if n < 2:
            break
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u == v or degree[u] >= max_degree or degree[v] >= max_degree:
            continue
        key = (min(u, v), max(u, v))
        if key in edges:
            continue
        edges.add(key)
        degree[u] += 1
        degree[v] += 1
    return LabeledGraph(n, frozenset(edges), _labels(n, labels, rng))


def gnp(n: int, p: float, rng: np.random.Generator, labels=()) -> LabeledGraph:
    edges = {(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p}
    return LabeledGraph(n, frozenset(edges), _labels(n, labels, rng))


FAMILIES = ("grid", "tree", "bounded-degree-random")


def family(name: str, n: int, seed: int = 0) -> LabeledGraph:
    rng = np.random.default_rng(seed)
    if name == "grid":
        return grid_with_vertices(n, labels=("P",), rng=rng)
    if name == "tree":
        return random_tree(n, rng, labels=("P",))
    if name == "bounded-degree-random":
        return bounded_degree_random(n, 4, rng, labels=("P",))
    raise ValueError(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}")
