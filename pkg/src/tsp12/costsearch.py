"""Worst costs for a fixed subtour vertex.

For a vertex ``x`` and ratio ``alpha`` the search maximises
``z - alpha * sum c(e) x(e)`` over cost vectors ``c`` in {1, 2} subject to
``sum_{e in T} c(e) >= z`` for every tour ``T``.  Tour rows are generated
lazily: each integral cost vector is checked with Held-Karp and the cheapest
tour is added whenever it undercuts ``z``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .instance import Instance, Tour, all_edges, edge, held_karp_opt, make_tour
from .ratlp import (GE, InfeasibleLP, Row, add_rows_and_resolve, change_bounds_and_resolve,
                    make_lp, simplex_solve)
from .subtour import FracSolution, NodeBudgetExceeded, is_subtour_feasible, node_budget

log = logging.getLogger(__name__)

SEED_CAP = 2000


class InvalidVertex(ValueError):
    """The fixed point is not a feasible subtour solution."""


def _tour_key(order: Sequence[int]) -> tuple:
    i = order.index(0)
    t = list(order[i:]) + list(order[:i])
    if len(t) > 2 and t[-1] < t[1]:
        t = [t[0]] + t[:0:-1]
    return tuple(t)


def support_instance(x: FracSolution) -> Instance:
    """The instance whose cost-1 edges are the support of ``x``."""
    return Instance.from_edges(x.n, x.support())


def seed_tours(x: FracSolution, cap: int = SEED_CAP) -> list:
    """Distinct tours using at least n-1 support edges of ``x``.

    Hamiltonian cycles of the support come first, then Hamiltonian paths of
    the support closed by one outside edge, each group in DFS order.  Tour
    costs are taken in :func:`support_instance`.
    """
    n = x.n
    sup = support_instance(x)
    adj = [sorted(sup.neighbors(u)) for u in range(n)]
    cycles, chords = {}, {}

    def dfs(path, seen):
        if len(cycles) >= cap:
            return
        u = path[-1]
        if len(path) == n:
            if path[0] > path[-1]:
                return
            key = _tour_key(path)
            if sup.cost(path[0], path[-1]) == 1:
                cycles.setdefault(key, None)
            else:
                chords.setdefault(key, None)
            return
        for w in adj[u]:
            if not seen >> w & 1:
                path.append(w)
                dfs(path, seen | 1 << w)
                path.pop()

    for s in range(n):
        dfs([s], 1 << s)
    keys = list(cycles) + [k for k in chords if k not in cycles]
    return [make_tour(sup, k) for k in keys[:cap]]


@dataclass(frozen=True)
class CostSearchProblem:
    x: FracSolution
    alpha: Fraction
    initial_tours: tuple = ()

    def __post_init__(self):
        x = self.x
        if any(not 0 <= v <= 1 for v in x.x.values()):
            raise InvalidVertex("x has a value outside [0, 1]")
        if not x.satisfies_degrees():
            raise InvalidVertex("x breaks a degree constraint")
        if not is_subtour_feasible(x):
            raise InvalidVertex("x breaks a subtour constraint")
        object.__setattr__(self, "alpha", Fraction(self.alpha))


@dataclass(frozen=True)
class CostSearchResult:
    objective: Fraction
    costs: dict          # edge -> 1 or 2
    generated_tours: int
    witness_tour: Tour
    nodes: int = 0

    def instance(self, n: int) -> Instance:
        return Instance.from_edges(n, [e for e, c in self.costs.items() if c == 1])


def _objective(inst: Instance, x: FracSolution, alpha: Fraction, tour_cost: int) -> Fraction:
    return tour_cost - alpha * x.cost_under(inst)


def worst_costs(prob: CostSearchProblem) -> CostSearchResult:
    """Exact optimum of the cost-search IP by branch-and-bound with lazy tours."""
    x, alpha = prob.x, prob.alpha
    n = x.n
    edges = all_edges(n)
    m = len(edges)
    zi = m  # index of z
    # maximise z - alpha * sum x_e c_e with 1 <= c_e <= 2 and 0 <= z <= 2n.
    obj = [-alpha * x.value(*e) for e in edges] + [Fraction(1)]
    lower = [Fraction(1)] * m + [Fraction(0)]
    upper = [Fraction(2)] * m + [Fraction(2 * n)]
    index = {e: k for k, e in enumerate(edges)}

    pool = []
    pool_keys = set()

    def tour_row(order) -> Row:
        coeffs = {index[edge(order[i], order[(i + 1) % n])]: Fraction(1) for i in range(n)}
        coeffs[zi] = Fraction(-1)
        return Row(coeffs, GE, Fraction(0))

    def add_tour(order) -> bool:
        key = _tour_key(list(order))
        if key in pool_keys:
            return False
        pool_keys.add(key)
        pool.append(tour_row(key))
        return True

    for t in prob.initial_tours:
        add_tour(t.order)
    if not pool:
        add_tour(list(range(n)))

    # Incumbent: all-ones costs give tour n and objective n - alpha n.
    ones = Instance.from_edges(n, edges)
    best_obj = _objective(ones, x, alpha, n)
    best = (ones, make_tour(ones, range(n)))

    root = simplex_solve(make_lp(obj, lower, upper, pool, sense="max"))
    stack = [(root, len(pool))]
    budget = node_budget()
    nodes = 0
    while stack:
        nodes += 1
        if nodes > budget:
            raise NodeBudgetExceeded(f"cost search exceeded {budget} nodes", best=best_obj)
        sol, have = stack.pop()
        if have < len(pool):
            sol = add_rows_and_resolve(sol, pool[have:])
            have = len(pool)
        if not sol.optimal or sol.objective <= best_obj:
            continue
        c = sol.values[:m]
        frac = [k for k in range(m) if c[k].denominator != 1]
        if frac:
            k = min(frac, key=lambda k: (abs(c[k] - Fraction(3, 2)), k))
            kids = []
            for lo, hi in ((2, 2), (1, 1)):
                try:
                    child = change_bounds_and_resolve(sol, {k: (lo, hi)})
                except InfeasibleLP:
                    continue
                kids.append((child, have))
            stack.extend(kids)
            continue
        inst = Instance.from_edges(n, [e for k, e in enumerate(edges) if c[k] == 1])
        cost, tour = held_karp_opt(inst)
        z = sol.values[zi]
        if cost < z:
            if not add_tour(tour.order):
                raise AssertionError("Held-Karp tour already in the pool but violated")
            stack.append((sol, have))
            continue
        value = _objective(inst, x, alpha, cost)
        if value > best_obj:
            best_obj, best = value, (inst, tour)
    inst, tour = best
    costs = {e: inst.cost(*e) for e in edges}
    # Closing check: Held-Karp agrees with the reported witness.
    hk, _ = held_karp_opt(inst)
    if hk != tour.cost or _objective(inst, x, alpha, hk) != best_obj:
        raise AssertionError("witness tour is not optimal under the returned costs")
    return CostSearchResult(best_obj, costs, len(pool), tour, nodes)


def search(x: FracSolution, alpha, cap: int = SEED_CAP) -> CostSearchResult:
    return worst_costs(CostSearchProblem(x, Fraction(alpha), tuple(seed_tours(x, cap))))


def brute_force_worst_costs(x: FracSolution, alpha) -> tuple:
    """Maximum over every cost vector of (min tour cost) - alpha * c.x.

    Tours and cost vectors are enumerated exhaustively as integer matrices,
    so this is for n <= 7 only.  Returns ``(objective, costs)`` with the
    lexicographically first maximiser (cost-1 = bit clear).
    """
    n = x.n
    if n > 7:
        raise ValueError("brute force is limited to n <= 7")
    alpha = Fraction(alpha)
    edges = all_edges(n)
    m = len(edges)
    index = {e: k for k, e in enumerate(edges)}
    tours = []
    for perm in itertools.permutations(range(1, n)):
        if perm[0] > perm[-1]:
            continue
        order = (0,) + perm
        row = np.zeros(m, dtype=np.int64)
        for i in range(n):
            row[index[edge(order[i], order[(i + 1) % n])]] = 1
        tours.append(row)
    T = np.array(tours)
    # Scale x.c by a common denominator so all arithmetic stays in integers.
    den = 1
    for e in edges:
        den = den * x.value(*e).denominator // np.gcd(den, x.value(*e).denominator)
    xs = np.array([int(x.value(*e) * den) for e in edges], dtype=np.int64)
    best = None
    chunk = 1 << 12
    for start in range(0, 1 << m, chunk):
        ids = np.arange(start, min(start + chunk, 1 << m), dtype=np.int64)
        C = 1 + ((ids[:, None] >> np.arange(m, dtype=np.int64)) & 1)
        tour_min = (C @ T.T).min(axis=1)
        xc = C @ xs
        # objective = tour_min - alpha * xc / den, compared as an exact fraction.
        num = tour_min * (alpha.denominator * den) - alpha.numerator * xc
        i = int(np.argmax(num))
        val = Fraction(int(num[i]), alpha.denominator * den)
        if best is None or val > best[0]:
            best = (val, int(ids[i]))
    val, bits = best
    costs = {e: 1 + (bits >> k & 1) for k, e in enumerate(edges)}
    return val, costs
