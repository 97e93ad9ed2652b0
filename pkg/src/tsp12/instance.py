"""1,2-TSP instances: cost-1 graph, exact tour oracle and graph transforms."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Edge = tuple  # (u, v) with u < v

MAX_HELD_KARP = 18


def edge(u: int, v: int) -> Edge:
    if u == v:
        raise ValueError(f"self-loop at node {u}")
    return (u, v) if u < v else (v, u)


def all_edges(n: int) -> list:
    return list(itertools.combinations(range(n), 2))


@dataclass(frozen=True)
class Instance:
    """A 1,2-TSP instance given by its graph of cost-1 edges.

    Every pair of nodes not listed in ``ones`` costs 2.
    """

    n: int
    ones: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("an instance needs at least one node")
        norm = set()
        for e in self.ones:
            u, v = e
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge {e} has an endpoint outside [0, {self.n})")
            norm.add(edge(u, v))
        object.__setattr__(self, "ones", frozenset(norm))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> "Instance":
        return cls(n, frozenset(edge(u, v) for u, v in edges))

    def cost(self, u: int, v: int) -> int:
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError(f"node out of range for n={self.n}: ({u}, {v})")
        return 1 if edge(u, v) in self.ones else 2

    def cost_matrix(self) -> list:
        c = [[2] * self.n for _ in range(self.n)]
        for u, v in self.ones:
            c[u][v] = c[v][u] = 1
        for i in range(self.n):
            c[i][i] = 0
        return c

    def adjacency(self) -> list:
        """Neighbour bitmask of every node in the cost-1 graph."""
        adj = [0] * self.n
        for u, v in self.ones:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return adj

    def neighbors(self, u: int) -> list:
        a = self.adjacency()[u]
        return [v for v in range(self.n) if a >> v & 1]

    def to_json(self) -> dict:
        return {"n": self.n, "one_edges": [list(e) for e in sorted(self.ones)]}

    @classmethod
    def from_json(cls, data: dict) -> "Instance":
        n = data["n"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise ValueError("'n' must be an integer")
        edges = []
        for pair in data["one_edges"]:
            u, v = pair
            if not u < v:
                raise ValueError(f"edge {pair} is not written with u < v")
            edges.append((u, v))
        if edges != sorted(edges):
            raise ValueError("one_edges must be sorted lexicographically")
        if len(set(edges)) != len(edges):
            raise ValueError("one_edges contains duplicates")
        return cls(n, frozenset(edges))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(", ", ": "))


@dataclass(frozen=True)
class Tour:
    order: tuple
    cost: int

    def edges(self) -> list:
        k = len(self.order)
        return [edge(self.order[i], self.order[(i + 1) % k]) for i in range(k)]

    def to_json(self) -> dict:
        return {"order": list(self.order), "cost": self.cost}

    @classmethod
    def from_json(cls, data: dict) -> "Tour":
        return cls(tuple(data["order"]), int(data["cost"]))


def make_tour(inst: Instance, order: Sequence[int]) -> Tour:
    order = tuple(order)
    if len(order) < 3:
        raise ValueError("a tour needs at least three nodes")
    if sorted(order) != list(range(inst.n)):
        raise ValueError("tour order is not a permutation of all nodes")
    k = len(order)
    return Tour(order, sum(inst.cost(order[i], order[(i + 1) % k]) for i in range(k)))


def check_tour(inst: Instance, tour: Tour) -> None:
    """Raise unless ``tour`` is Hamiltonian and its cost is recomputed exactly."""
    if make_tour(inst, tour.order).cost != tour.cost:
        raise ValueError(f"tour cost {tour.cost} does not match the instance")


def held_karp_opt(inst: Instance) -> tuple:
    """Exact optimal tour by bitmask dynamic programming.

    Node 0 is the fixed start; of all optimal tours the lexicographically
    smallest order is returned.
    """
    n = inst.n
    if not 3 <= n <= MAX_HELD_KARP:
        raise ValueError(f"held_karp_opt supports 3 <= n <= {MAX_HELD_KARP}, got {n}")
    c = inst.cost_matrix()
    m = n - 1
    full = (1 << m) - 1
    inf = 4 * n
    # dp[mask][k]: cheapest path from node 0 through exactly the nodes of mask
    # (node j <-> bit j-1), ending at node k+1.
    dp = [None] * (1 << m)
    for mask in range(1, 1 << m):
        dp[mask] = [inf] * m
    for k in range(m):
        dp[1 << k][k] = c[0][k + 1]
    for mask in range(1, 1 << m):
        row = dp[mask]
        rest0 = full & ~mask
        if not rest0:
            continue
        for k in range(m):
            cur = row[k]
            if cur >= inf:
                continue
            ck = c[k + 1]
            rest = rest0
            while rest:
                low = rest & -rest
                j = low.bit_length() - 1
                nxt = dp[mask | low]
                v = cur + ck[j + 1]
                if v < nxt[j]:
                    nxt[j] = v
                rest ^= low
    best = min(dp[full][k] + c[k + 1][0] for k in range(m))

    order = [0]
    spent = 0
    remaining = full
    u = 0
    while remaining:
        for j in range(m):
            if remaining >> j & 1:
                # dp[remaining][j] read backwards: from node j+1 through the
                # rest of `remaining` and home to 0.
                if spent + c[u][j + 1] + dp[remaining][j] == best:
                    break
        spent += c[u][j + 1]
        u = j + 1
        order.append(u)
        remaining &= ~(1 << j)
    tour = make_tour(inst, order)
    assert tour.cost == best
    return best, tour


def brute_force_opt(inst: Instance) -> int:
    """Minimum tour cost by trying every permutation; for tests on tiny n."""
    c = inst.cost_matrix()
    best = None
    for perm in itertools.permutations(range(1, inst.n)):
        if perm[0] > perm[-1]:
            continue
        order = (0,) + perm
        cost = sum(c[order[i]][order[(i + 1) % inst.n]] for i in range(inst.n))
        if best is None or cost < best:
            best = cost
    return best


def components(n: int, adj: Sequence[int]) -> list:
    seen = 0
    out = []
    for s in range(n):
        if seen >> s & 1:
            continue
        comp = 1 << s
        frontier = 1 << s
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= adj[low.bit_length() - 1]
                f ^= low
            frontier = nxt & ~comp
            comp |= nxt
        seen |= comp
        out.append([v for v in range(n) if comp >> v & 1])
    return out


def cut_vertices(n: int, adj: Sequence[int]) -> set:
    """Articulation points of the graph given by neighbour bitmasks."""
    disc = [-1] * n
    low = [0] * n
    cuts = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        children = 0
        stack = [(root, -1, [v for v in range(n) if adj[root] >> v & 1])]
        while stack:
            u, parent, todo = stack[-1]
            if todo:
                v = todo.pop()
                if disc[v] == -1:
                    disc[v] = low[v] = timer
                    timer += 1
                    if u == root:
                        children += 1
                    stack.append((v, u, [w for w in range(n) if adj[v] >> w & 1]))
                elif v != parent:
                    low[u] = min(low[u], disc[v])
            else:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[u])
                    if p != root and low[u] >= disc[p]:
                        cuts.add(p)
        if children > 1:
            cuts.add(root)
    return cuts


def is_connected(inst: Instance) -> bool:
    return len(components(inst.n, inst.adjacency())) == 1


def is_biconnected(inst: Instance) -> bool:
    """Connected cost-1 graph with no cut vertex (and at least three nodes)."""
    if inst.n < 3:
        return False
    adj = inst.adjacency()
    return len(components(inst.n, adj)) == 1 and not cut_vertices(inst.n, adj)


class TransformNotApplicable(ValueError):
    """The transform's precondition does not hold, e.g. it would be a no-op."""


def connectify(inst: Instance) -> Instance:
    """Add a node joined by cost-1 edges to every node of a disconnected graph."""
    if is_connected(inst):
        raise TransformNotApplicable("cost-1 graph is already connected")
    star = inst.n
    return Instance(inst.n + 1, inst.ones | {(j, star) for j in range(inst.n)})


def biconnectify(inst: Instance) -> Instance:
    """Add a node joined to every non-cut vertex of a connected graph."""
    adj = inst.adjacency()
    if len(components(inst.n, adj)) != 1:
        raise TransformNotApplicable("cost-1 graph is disconnected; apply connectify first")
    cuts = cut_vertices(inst.n, adj)
    if not cuts and inst.n >= 3:
        raise TransformNotApplicable("cost-1 graph is already biconnected")
    star = inst.n
    return Instance(inst.n + 1, inst.ones | {(j, star) for j in range(inst.n) if j not in cuts})


def make_biconnected(inst: Instance) -> Instance:
    """Apply connectify/biconnectify until the cost-1 graph is biconnected."""
    while not is_biconnected(inst):
        inst = biconnectify(inst) if is_connected(inst) else connectify(inst)
    return inst


def add_absorber_node(inst: Instance, x) -> Instance:
    """New node with cost-1 edges to every endpoint of a used cost-2 edge.

    ``x`` is an optimal subtour solution of value at least ``n + 1``.
    """
    return reroute_through_absorber(inst, x)[0]


def reroute_through_absorber(inst: Instance, x):
    """The absorber instance together with the rerouted, equal-cost solution.

    One unit of flow is moved off cost-2 edges (in edge order, splitting the
    last one if needed) onto the two edges through the new node.
    """
    from .subtour import FracSolution

    if x.n != inst.n:
        raise ValueError("solution and instance disagree on n")
    if x.objective < inst.n + 1:
        raise TransformNotApplicable(f"LP value {x.objective} is below n + 1 = {inst.n + 1}")
    heavy = [(e, v) for e, v in sorted(x.x.items()) if v > 0 and e not in inst.ones]
    if not heavy:
        raise TransformNotApplicable("x puts no weight on any cost-2 edge")
    star = inst.n
    touched = {u for e, _ in heavy for u in e}
    new = Instance(inst.n + 1, inst.ones | {(j, star) for j in touched})

    y = dict(x.x)
    left = Fraction(1)
    for (u, v), val in heavy:
        if not left:
            break
        t = min(val, left)
        y[(u, v)] = val - t
        y[(u, star)] = y.get((u, star), Fraction(0)) + t
        y[(v, star)] = y.get((v, star), Fraction(0)) + t
        left -= t
    if left:
        raise TransformNotApplicable("less than one unit of flow on cost-2 edges")
    y = {e: v for e, v in y.items() if v}
    return new, FracSolution.from_values(new, y)


# -- named instances used throughout the tests and docs ---------------------

def w9() -> Instance:
    """The 9-node example with LP value 9 and optimal tour 10.

    Two triangles {0,1,2} and {6,7,8} joined by the paths 0-3-6, 1-4-7, 2-5-8.
    """
    tri = [(0, 1), (0, 2), (1, 2), (6, 7), (6, 8), (7, 8)]
    paths = [(0, 3), (3, 6), (1, 4), (4, 7), (2, 5), (5, 8)]
    return Instance.from_edges(9, tri + paths)


def complete(n: int) -> Instance:
    return Instance.from_edges(n, all_edges(n))


def two_triangles() -> Instance:
    return Instance.from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])
