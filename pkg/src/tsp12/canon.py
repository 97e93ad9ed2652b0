"""Canonical labelling of small simple graphs.

Graphs are lists of neighbour bitmasks.  The labelling explores the
individualisation/refinement search tree, keeps the leaf with the largest
relabelled adjacency string, and prunes children in the same orbit of the
automorphisms found so far (restricted to those fixing the current prefix).
Good for the n <= 12 graphs used here; not a general-purpose tool.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass


def popcount(v: int) -> int:
    return bin(v).count("1")


def _refine(adj: list, cells: list) -> list:
    """Coarsest equitable refinement of an ordered partition.

    Each round splits every cell by the vector of neighbour counts into all
    current cells; the order of the new cells depends only on those counts,
    so the result commutes with relabelling.
    """
    while True:
        masks = [sum(1 << v for v in cell) for cell in cells]
        out = []
        for cell in cells:
            if len(cell) == 1:
                out.append(cell)
                continue
            sig = {v: tuple(popcount(adj[v] & m) for m in masks) for v in cell}
            keys = sorted(set(sig.values()))
            for k in keys:
                out.append([v for v in cell if sig[v] == k])
        if len(out) == len(cells):
            return out
        cells = out


def _individualize(cells: list, ci: int, v: int) -> list:
    cell = cells[ci]
    return cells[:ci] + [[v], [u for u in cell if u != v]] + cells[ci + 1:]


def _certificate(adj: list, order: list) -> int:
    """Upper-triangle adjacency of the graph relabelled by ``order`` as an integer."""
    n = len(order)
    pos = [0] * n
    for i, v in enumerate(order):
        pos[v] = i
    bits = 0
    for i in range(n):
        a = adj[order[i]]
        for j in range(i + 1, n):
            bits = (bits << 1) | (a >> order[j] & 1)
    return bits


def _orbits(n: int, gens: list) -> list:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for g in gens:
        for a in range(n):
            ra, rb = find(a), find(g[a])
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    return [find(a) for a in range(n)]


@dataclass(frozen=True)
class Labelling:
    """``order[i]`` is the vertex placed at canonical position ``i``."""

    order: tuple
    cert: int
    generators: tuple
    orbit: tuple  # orbit representative of each vertex under Aut(G)

    @property
    def position(self) -> list:
        pos = [0] * len(self.order)
        for i, v in enumerate(self.order):
            pos[v] = i
        return pos


def canonical_labelling(adj: list, initial: list | None = None) -> Labelling:
    n = len(adj)
    if n == 0:
        return Labelling((), 0, (), ())
    cells = _refine(adj, initial if initial is not None else [list(range(n))])
    gens: list = []
    best = {"order": None, "cert": -1}
    leaves: dict = {}

    def leaf(order):
        cert = _certificate(adj, order)
        if cert in leaves:
            other = leaves[cert]
            # order[i] and other[i] sit at the same position in equal graphs.
            g = [0] * n
            for a, b in zip(other, order):
                g[a] = b
            if any(g[i] != i for i in range(n)):
                gens.append(g)
            return
        leaves[cert] = order
        if cert > best["cert"]:
            best["cert"], best["order"] = cert, order

    def search(cells, prefix):
        if len(cells) == n:
            leaf([c[0] for c in cells])
            return
        ci = next(i for i, c in enumerate(cells) if len(c) > 1)
        tried = []
        for v in sorted(cells[ci]):
            if tried:
                fixing = [g for g in gens if all(g[u] == u for u in prefix)]
                orb = _orbits(n, fixing)
                if any(orb[v] == orb[t] for t in tried):
                    continue
            search(_refine(adj, _individualize(cells, ci, v)), prefix + [v])
            tried.append(v)

    search(cells, [])
    orbit = tuple(_orbits(n, gens))
    return Labelling(tuple(best["order"]), best["cert"], tuple(tuple(g) for g in gens), orbit)


def certificate(adj: list) -> int:
    return canonical_labelling(adj).cert


def brute_certificate(adj: list) -> int:
    """Largest relabelled adjacency over all n! orders; an oracle for small n."""
    n = len(adj)
    return max(_certificate(adj, list(p)) for p in itertools.permutations(range(n)))


def edges_to_adj(n: int, edges) -> list:
    adj = [0] * n
    for u, v in edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    return adj


def adj_to_edges(adj: list) -> list:
    n = len(adj)
    return [(u, v) for u in range(n) for v in range(u + 1, n) if adj[u] >> v & 1]


def canonical_adj(adj: list) -> list:
    """The graph relabelled into canonical order."""
    lab = canonical_labelling(adj)
    pos = lab.position
    out = [0] * len(adj)
    for u, v in adj_to_edges(adj):
        out[pos[u]] |= 1 << pos[v]
        out[pos[v]] |= 1 << pos[u]
    return out
