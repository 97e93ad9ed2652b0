"""Fractional 2-matching LP, subtour LP, integer TSP and integer 2-matching."""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .instance import Instance, Tour, all_edges, edge, make_tour
from .ratlp import (
    EQ,
    GE,
    BasicSolution,
    InfeasibleLP,
    Row,
    add_rows_and_resolve,
    change_bounds_and_resolve,
    fmt_rat,
    make_lp,
    matrix_rank,
    parse_rat,
    simplex_solve,
)

DEFAULT_NODE_BUDGET = 200000
HALF = Fraction(1, 2)


class NodeBudgetExceeded(RuntimeError):
    """Branch-and-bound ran out of nodes; ``best`` is the incumbent so far."""

    def __init__(self, msg, best=None, bound=None):
        super().__init__(msg)
        self.best = best
        self.bound = bound


def node_budget() -> int:
    return int(os.environ.get("TSP12_NODE_BUDGET", DEFAULT_NODE_BUDGET))


def edge_key(e) -> str:
    return f"{e[0]}-{e[1]}"


def parse_edge_key(s: str):
    u, v = s.split("-")
    return edge(int(u), int(v))


@dataclass(frozen=True)
class FracSolution:
    """Edge values over the complete graph on ``n`` nodes (absent means 0)."""

    n: int
    x: dict
    objective: Fraction
    cuts: tuple = ()
    lp: Optional[BasicSolution] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_values(cls, inst: Instance, x: dict, cuts=(), lp=None) -> "FracSolution":
        x = {edge(*e): Fraction(v) for e, v in x.items() if v}
        obj = sum((v * inst.cost(*e) for e, v in x.items()), Fraction(0))
        return cls(inst.n, x, obj, tuple(cuts), lp)

    def value(self, u: int, v: int) -> Fraction:
        return self.x.get(edge(u, v), Fraction(0))

    def support(self) -> list:
        return sorted(self.x)

    def degree(self, u: int) -> Fraction:
        return sum((v for e, v in self.x.items() if u in e), Fraction(0))

    def cut_value(self, S: Iterable[int]) -> Fraction:
        S = set(S)
        return sum((v for (a, b), v in self.x.items() if (a in S) != (b in S)), Fraction(0))

    def satisfies_degrees(self) -> bool:
        return all(0 <= v <= 1 for v in self.x.values()) and all(
            self.degree(u) == 2 for u in range(self.n))

    def is_integral(self) -> bool:
        return all(v.denominator == 1 for v in self.x.values())

    def cost_under(self, inst: Instance) -> Fraction:
        return sum((v * inst.cost(*e) for e, v in self.x.items()), Fraction(0))

    def to_json(self) -> dict:
        return {
            "objective": fmt_rat(self.objective),
            "x": {edge_key(e): fmt_rat(v) for e, v in sorted(self.x.items())},
            "cuts": [sorted(S) for S in self.cuts],
        }

    @classmethod
    def from_json(cls, data: dict, n: Optional[int] = None) -> "FracSolution":
        x = {}
        for k, v in data["x"].items():
            val = parse_rat(v)
            if val:
                x[parse_edge_key(k)] = val
        if n is None:
            n = 1 + max((max(e) for e in x), default=-1)
        cuts = tuple(frozenset(S) for S in data.get("cuts", []))
        return cls(n, x, parse_rat(data["objective"]), cuts)


def _edge_index(n: int) -> tuple:
    edges = all_edges(n)
    return edges, {e: k for k, e in enumerate(edges)}


def f2m_lp(inst: Instance):
    """Degree and bound constraints only, over every pair of nodes."""
    edges, _ = _edge_index(inst.n)
    cost = [inst.cost(*e) for e in edges]
    rows = [Row({k: 1 for k, e in enumerate(edges) if i in e}, EQ, 2) for i in range(inst.n)]
    return make_lp(cost, [0] * len(edges), [1] * len(edges), rows)


def subtour_row(n: int, S) -> Row:
    edges, _ = _edge_index(n)
    S = set(S)
    return Row({k: 1 for k, (a, b) in enumerate(edges) if (a in S) != (b in S)}, GE, 2)


def _to_frac(inst: Instance, sol: BasicSolution, cuts=()) -> FracSolution:
    edges, _ = _edge_index(inst.n)
    x = {e: v for e, v in zip(edges, sol.values) if v}
    return FracSolution(inst.n, x, sol.objective, tuple(cuts), sol)


def solve_f2m_lp(inst: Instance, rule: str = "bland") -> FracSolution:
    """Basic optimal fractional 2-matching (values in {0, 1/2, 1})."""
    if inst.n < 3:
        raise ValueError("need at least three nodes")
    sol = simplex_solve(f2m_lp(inst), rule)
    assert sol.optimal, sol.status
    return _to_frac(inst, sol)


# -- minimum cuts -------------------------------------------------------------

def stoer_wagner(n: int, weight: dict) -> tuple:
    """Global minimum cut of a weighted graph on nodes ``0..n-1``.

    ``weight`` maps edges to non-negative rationals.  Returns the minimum
    value, one side of a minimum cut, and every cut-of-the-phase as
    ``(value, side)`` pairs.
    """
    if n < 2:
        raise ValueError("a cut needs at least two nodes")
    W = [[Fraction(0)] * n for _ in range(n)]
    for (u, v), w in weight.items():
        W[u][v] += w
        W[v][u] += w
    groups = {i: [i] for i in range(n)}
    active = list(range(n))
    phases = []
    best = None
    best_side = None
    while len(active) > 1:
        start = active[0]
        conn = {v: W[start][v] for v in active if v != start}
        order = [start]
        last_val = None
        while conn:
            v = max(conn, key=lambda k: (conn[k], -k))
            last_val = conn.pop(v)
            order.append(v)
            for u in conn:
                conn[u] += W[v][u]
        s, t = order[-2], order[-1]
        side = frozenset(groups[t])
        phases.append((last_val, side))
        if best is None or last_val < best:
            best, best_side = last_val, side
        groups[s].extend(groups.pop(t))
        for u in active:
            if u != s and u != t:
                W[s][u] += W[t][u]
                W[u][s] = W[s][u]
        active.remove(t)
    return best, best_side, phases


def _normal_side(n: int, S) -> frozenset:
    S = frozenset(S)
    other = frozenset(range(n)) - S
    if len(other) < len(S) or (len(other) == len(S) and min(other) < min(S)):
        return other
    return S


def min_cut_separation(x: FracSolution):
    """A global minimum cut ``(S, value)`` of the support, or ``None`` if it is >= 2."""
    value, side, _ = stoer_wagner(x.n, x.x)
    if value >= 2:
        return None
    return _normal_side(x.n, side), value


def violated_cuts(x: FracSolution) -> list:
    """Every distinct cut-of-the-phase below 2, as node sets."""
    _, _, phases = stoer_wagner(x.n, x.x)
    seen = []
    for value, side in phases:
        if value < 2:
            S = _normal_side(x.n, side)
            if not 3 <= len(S) <= x.n - 3:
                raise AssertionError(f"violated cut {sorted(S)} has an impossible size")
            if S not in seen:
                seen.append(S)
    return seen


def exhaustive_min_subtour_cut(x: FracSolution) -> tuple:
    """Smallest ``x(delta(S))`` over all S with 3 <= |S| <= n-3, by enumeration."""
    n = x.n
    best = None
    best_S = None
    items = list(x.x.items())
    for mask in range(1 << (n - 1)):
        size = bin(mask).count("1")
        # S always excludes node n-1; complements cover the rest.
        if not 3 <= size <= n - 3:
            continue
        val = sum((v for (a, b), v in items if (mask >> a & 1) != (mask >> b & 1)), Fraction(0))
        if best is None or val < best:
            best = val
            best_S = frozenset(i for i in range(n) if mask >> i & 1)
    return best, best_S


def is_subtour_feasible(x: FracSolution) -> bool:
    if not x.satisfies_degrees():
        return False
    if x.n < 6:
        return True
    return stoer_wagner(x.n, x.x)[0] >= 2


def is_extreme(x: FracSolution) -> bool:
    """Whether ``x`` is a vertex of the subtour polytope (exhaustive tight sets)."""
    n = x.n
    edges, _ = _edge_index(n)
    rows = []
    for i in range(n):
        rows.append([Fraction(1) if i in e else Fraction(0) for e in edges])
    for mask in range(1 << (n - 1)):
        size = bin(mask).count("1")
        if not 3 <= size <= n - 3:
            continue
        S = {i for i in range(n) if mask >> i & 1}
        if x.cut_value(S) == 2:
            rows.append([Fraction(1) if (a in S) != (b in S) else Fraction(0) for a, b in edges])
    for k, e in enumerate(edges):
        v = x.x.get(e, Fraction(0))
        if v == 0 or v == 1:
            r = [Fraction(0)] * len(edges)
            r[k] = Fraction(1)
            rows.append(r)
    return matrix_rank(rows, len(edges)) == len(edges)


# -- subtour LP ---------------------------------------------------------------

def _separate(inst: Instance, sol: BasicSolution, cuts: list) -> BasicSolution:
    """Add violated subtour cuts until none remain; ``cuts`` is extended in place."""
    while sol.optimal:
        x = _to_frac(inst, sol)
        found = violated_cuts(x)
        if not found:
            break
        cuts.extend(found)
        sol = add_rows_and_resolve(sol, [subtour_row(inst.n, S) for S in found])
    return sol


def solve_subtour_lp(inst: Instance, rule: str = "bland") -> tuple:
    """Exact subtour LP optimum by cutting planes from the F2M LP.

    Returns ``(FracSolution, cuts)``; the cuts are the node sets whose
    constraints were generated, in generation order.
    """
    if inst.n < 3:
        raise ValueError("need at least three nodes")
    root = simplex_solve(f2m_lp(inst), rule)
    cuts = []
    sol = _separate(inst, root, cuts)
    if not sol.optimal:
        raise AssertionError(f"subtour LP came back {sol.status}")
    x = _to_frac(inst, sol, cuts)
    return x, tuple(cuts)


def cycles_of_integral(n: int, x: dict) -> list:
    """Node cycles of an integral degree-2 solution, each starting at its smallest node."""
    nbrs = {i: [] for i in range(n)}
    for (u, v), val in x.items():
        if val == 1:
            nbrs[u].append(v)
            nbrs[v].append(u)
    seen = set()
    out = []
    for s in range(n):
        if s in seen:
            continue
        if len(nbrs[s]) != 2:
            raise ValueError(f"node {s} has degree {len(nbrs[s])} in an integral 2-matching")
        cyc = [s]
        seen.add(s)
        prev, cur = s, min(nbrs[s])
        while cur != s:
            cyc.append(cur)
            seen.add(cur)
            a, b = nbrs[cur]
            prev, cur = cur, (b if a == prev else a)
        out.append(cyc)
    return out


def nearest_neighbour_tour(inst: Instance) -> Tour:
    best = None
    c = inst.cost_matrix()
    for s in range(inst.n):
        order = [s]
        left = set(range(inst.n)) - {s}
        while left:
            u = order[-1]
            v = min(left, key=lambda w: (c[u][w], w))
            order.append(v)
            left.remove(v)
        t = make_tour(inst, order)
        if best is None or t.cost < best.cost:
            best = t
    return best


def _ceil(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def _branch_and_bound(inst, root: BasicSolution, incumbent, separate: bool, rng=None):
    """Depth-first branch-and-bound on 0/1 edge variables.

    ``incumbent`` is ``(cost, values)`` of a known solution or ``None``.
    Returns the best ``(cost, values)`` found; costs are integral so a node
    is pruned once the ceiling of its bound reaches the incumbent.
    """
    best = incumbent
    stack = [root]
    budget = node_budget()
    nodes = 0
    while stack:
        nodes += 1
        if nodes > budget:
            raise NodeBudgetExceeded(
                f"branch-and-bound exceeded {budget} nodes",
                best=None if best is None else best[0])
        sol = stack.pop()
        if separate:
            sol = _separate(inst, sol, [])
        if not sol.optimal:
            continue
        bound = _ceil(sol.objective)
        if best is not None and bound >= best[0]:
            continue
        frac = [k for k, v in enumerate(sol.values) if v.denominator != 1]
        if not frac:
            best = (int(sol.objective), sol.values)
            continue
        if rng is None:
            k = frac[0]
            first, second = 1, 0
        else:
            k = rng.choice(frac)
            first, second = rng.sample([0, 1], 2)
        children = []
        for side in (second, first):
            try:
                child = change_bounds_and_resolve(sol, {k: (side, side)})
            except InfeasibleLP:
                continue
            if child.optimal:
                children.append(child)
        stack.extend(children)
    return best


def solve_tsp_ip(inst: Instance, rng: Optional[random.Random] = None, rule: str = "bland") -> tuple:
    """Exact optimal tour by branch-and-bound over the subtour LP.

    ``rng`` randomises the branching variable and child order; the optimal
    cost does not depend on it.
    """
    if inst.n < 3:
        raise ValueError("need at least three nodes")
    start = nearest_neighbour_tour(inst)
    edges, index = _edge_index(inst.n)
    root = simplex_solve(f2m_lp(inst), rule)
    root = _separate(inst, root, [])
    if _ceil(root.objective) >= start.cost:
        return start.cost, start
    vals = [Fraction(0)] * len(edges)
    for e in start.edges():
        vals[index[e]] = Fraction(1)
    best = _branch_and_bound(inst, root, (start.cost, tuple(vals)), True, rng)
    cost, values = best
    x = {e: v for e, v in zip(edges, values) if v}
    (cycle,) = cycles_of_integral(inst.n, x)
    tour = make_tour(inst, cycle)
    assert tour.cost == cost
    return cost, tour


def solve_min_2m(inst: Instance, rng: Optional[random.Random] = None, rule: str = "bland") -> tuple:
    """Minimum-cost 2-matching by branch-and-bound over the F2M LP.

    Returns ``(cost, cycles)`` with every cycle starting at its smallest node.
    """
    if inst.n < 3:
        raise ValueError("need at least three nodes")
    edges, index = _edge_index(inst.n)
    root = simplex_solve(f2m_lp(inst), rule)
    start = nearest_neighbour_tour(inst)
    vals = [Fraction(0)] * len(edges)
    for e in start.edges():
        vals[index[e]] = Fraction(1)
    cost, values = _branch_and_bound(inst, root, (start.cost, tuple(vals)), False, rng)
    x = {e: v for e, v in zip(edges, values) if v}
    cycles = cycles_of_integral(inst.n, x)
    assert sum(inst.cost(c[i], c[(i + 1) % len(c)]) for c in cycles for i in range(len(c))) == cost
    return cost, cycles
