"""Tours from fractional 2-matchings and 2-matchings.

The partial-tour machinery grows an acyclic subgraph of maximum degree 2
from the x=1 edges of an F2M solution, adds as many cost-1 cycle edges as
the path/odd-cycle augmentation allows, and closes the resulting paths into a
tour with whatever edges are needed.  The 2-matching side covers cycle
stitching, normalisation to one non-pure cycle, and the pure-cycle matching.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .f2m import F2MStats, decompose, is_canonical, is_two_connected, stats
from .instance import Instance, Tour, edge, make_tour
from .subtour import FracSolution

log = logging.getLogger(__name__)

HALF = Fraction(1, 2)


class PreconditionError(ValueError):
    """An input does not meet the documented precondition."""


class BoundViolation(AssertionError):
    """A guaranteed inequality failed at runtime; always a bug or a finding."""


class PartialTour:
    """Acyclic edge set with every degree at most 2.

    ``end[u]`` is the other endpoint of the path whose endpoint is ``u``
    (``u`` itself for an isolated node), which makes the cycle test O(1).
    """

    def __init__(self, n: int, edges: Sequence = ()):
        self.n = n
        self.edges = set()
        self.deg = [0] * n
        self.end = list(range(n))
        for e in edges:
            if not self.can_add(*e):
                raise PreconditionError(f"edge {e} would break the partial tour")
            self.add(*e)

    def copy(self) -> "PartialTour":
        t = PartialTour(self.n)
        t.edges = set(self.edges)
        t.deg = list(self.deg)
        t.end = list(self.end)
        return t

    def can_add(self, u: int, v: int) -> bool:
        if u == v or edge(u, v) in self.edges:
            return False
        if self.deg[u] >= 2 or self.deg[v] >= 2:
            return False
        return self.end[u] != v

    def add(self, u: int, v: int):
        eu, ev = self.end[u], self.end[v]
        self.edges.add(edge(u, v))
        self.deg[u] += 1
        self.deg[v] += 1
        self.end[eu] = ev
        self.end[ev] = eu

    def degree_one(self) -> list:
        return [u for u in range(self.n) if self.deg[u] == 1]

    def cost(self, inst: Instance) -> int:
        return sum(inst.cost(*e) for e in self.edges)

    def paths(self) -> list:
        """Node sequences of the paths, each from its smaller endpoint."""
        nbrs = {u: [] for u in range(self.n)}
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        seen = set()
        out = []
        for s in range(self.n):
            if s in seen or self.deg[s] == 2:
                continue
            path = [s]
            seen.add(s)
            prev, cur = None, s
            while True:
                nxt = [w for w in nbrs[cur] if w != prev]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
                path.append(cur)
                seen.add(cur)
            out.append(path)
        if len(seen) != self.n:
            raise PreconditionError("partial tour contains a cycle")
        return out


def _greedy(T: PartialTour, seq: list) -> list:
    added = []
    for u, v in seq:
        if T.can_add(u, v):
            T.add(u, v)
            added.append((u, v))
    return added


def augment(T: PartialTour, nodes: Sequence[int], cycle: bool = False,
            trace: Optional[list] = None) -> list:
    """Pick edges of the path or odd cycle through ``nodes`` to add to ``T``.

    Every node of ``nodes`` must have degree exactly 1 in ``T``.  The result
    ``A'`` keeps ``T + A'`` a partial tour and has at least ``|A|/3`` edges
    for a cycle and ``(|A|-1)/3`` for a path.  ``T`` is not modified.
    """
    nodes = list(nodes)
    if len(set(nodes)) != len(nodes):
        raise PreconditionError("augmenting path or cycle repeats a node")
    for u in nodes:
        if T.deg[u] != 1:
            raise PreconditionError(f"node {u} has degree {T.deg[u]} in T, expected 1")
    m = len(nodes)
    if cycle:
        if m < 3 or m % 2 == 0:
            raise PreconditionError(f"augmenting cycle must be odd with >= 3 nodes, got {m}")
        seq = [(nodes[i], nodes[(i + 1) % m]) for i in range(m)]
    else:
        if m < 2:
            raise PreconditionError("augmenting path needs at least one edge")
        seq = [(nodes[i], nodes[i + 1]) for i in range(m - 1)]
    for e in seq:
        if edge(*e) in T.edges:
            raise PreconditionError(f"edge {e} is already in T")

    if not cycle:
        added = _greedy(T.copy(), seq)
        need = -(-(len(seq) - 1) // 3)
        if trace is not None:
            trace.append({"kind": "path", "nodes": nodes, "added": added})
    else:
        inside = set(nodes)
        j = next((i for i, u in enumerate(nodes) if T.end[u] not in inside), None)
        if j is None:
            raise AssertionError("odd cycle with every T-path ending inside it")
        options = []
        for start in (j - 1, j):
            order = [seq[(start + i) % m] for i in range(m)]
            got = _greedy(T.copy(), order)
            first_third = len(got) >= 2 and got[0] == order[0] and got[1] == order[2]
            options.append((first_third, len(got), got, start % m))
        best = max(options, key=lambda o: (o[0], o[1], -options.index(o)))
        added = best[2]
        need = -(-len(seq) // 3)
        if trace is not None:
            trace.append({"kind": "cycle", "nodes": nodes, "pivot": nodes[j],
                          "start": seq[best[3]], "first_and_third": best[0], "added": added})
    if len(added) < need:
        raise BoundViolation(f"augment added {len(added)} of {len(seq)} edges, needed {need}")
    return added


def complete_partial_tour(inst: Instance, T: PartialTour) -> Tour:
    """Close the paths of ``T`` into a tour.

    Paths are chained by smallest node, each oriented so the joining edge
    costs 1 when it can.  The cost is at most ``c(T) + d`` for ``d`` degree-1
    nodes, with equality exactly when every joining edge costs 2.
    """
    if any(d == 0 for d in T.deg):
        raise PreconditionError("partial tour leaves a node uncovered")
    paths = T.paths()
    if not paths:
        raise PreconditionError("edge set already contains a full cycle")
    paths.sort(key=min)
    order = list(paths[0])
    for p in paths[1:]:
        tail = order[-1]
        if inst.cost(tail, p[0]) <= inst.cost(tail, p[-1]):
            order.extend(p)
        else:
            order.extend(reversed(p))
    tour = make_tour(inst, order)
    if tour.cost > T.cost(inst) + len(T.degree_one()):
        raise BoundViolation("completed tour costs more than c(T) + d")
    return tour


@dataclass
class TourBuild:
    """A tour from the F2M construction plus the counts behind its cost bound."""

    tour: Tour
    stats: F2MStats
    R: int
    added_from_R: int
    degree_one: int
    p1_paths: int
    p1_non_eared: int
    p1_non_eared_success: int
    x_cost: Fraction
    trace: list = field(default_factory=list)

    @property
    def half_claim_holds(self) -> bool:
        return 2 * self.p1_non_eared_success >= self.p1_non_eared


def _r_components(inst: Instance, half_cycles) -> tuple:
    """Maximal cost-1 runs of every half-cycle: ``(paths, cycles, p)``."""
    paths, cycles = [], []
    p = 0
    for c in half_cycles:
        m = len(c)
        heavy = [i for i in range(m) if inst.cost(c[i], c[(i + 1) % m]) == 2]
        p += len(heavy)
        if not heavy:
            cycles.append(list(c))
            continue
        # Start right after a cost-2 edge so runs never wrap.
        s = (heavy[0] + 1) % m
        ring = [c[(s + i) % m] for i in range(m)]
        run = [ring[0]]
        for i in range(m):
            a, b = ring[i], ring[(i + 1) % m]
            if inst.cost(a, b) == 1:
                run.append(b)
            else:
                if len(run) > 1:
                    paths.append(run)
                run = [b]
    return paths, cycles, p


def run_tour_76(inst: Instance, x: FracSolution, trace: bool = False) -> TourBuild:
    """The partial-tour construction on a connected fractional F2M vertex."""
    dec = decompose(x)
    if dec.integer_cycles or len(dec.fractional_components) != 1:
        raise PreconditionError(
            "x must be a single fractional component; use tour_from_f2m for general F2M solutions")
    (comp,) = dec.fractional_components
    st = stats(inst, x)
    log_ = [] if trace else None

    partner = {}
    for path in comp.one_paths:
        partner[path[0]] = path[-1]
        partner[path[-1]] = path[0]
    T = PartialTour(inst.n, [e for e, v in x.x.items() if v == 1])
    r_paths, r_cycles, p = _r_components(inst, comp.half_cycles)
    assert p == st.p
    R = sum(len(a) - 1 for a in r_paths) + sum(len(c) for c in r_cycles)
    assert R == st.k - st.p

    p1 = sorted((a for a in r_paths if (len(a) - 1) % 3 == 1), key=min)
    other_paths = [a for a in r_paths if (len(a) - 1) % 3 != 1]
    z = 0
    non_eared = 0
    non_eared_ok = 0
    added = 0
    leftovers = []
    for a in p1:
        eared = partner[a[0]] == a[1] and partner[a[-1]] == a[-2]
        z += eared
        non_eared += not eared
        took = None
        if T.can_add(a[0], a[1]):
            T.add(a[0], a[1])
            took = "first"
            rest = a[2:]
        elif T.can_add(a[-2], a[-1]):
            T.add(a[-2], a[-1])
            took = "last"
            rest = a[:-2]
        else:
            rest = a
        if took:
            added += 1
            non_eared_ok += not eared
        if log_ is not None:
            log_.append({"kind": "p1", "path": a, "eared": eared, "took": took})
        if len(rest) > 1:
            leftovers.append(rest)

    components = [(a, False) for a in other_paths + leftovers] + [(c, True) for c in r_cycles]
    components.sort(key=lambda item: min(item[0]))
    for nodes, is_cycle in components:
        got = augment(T, nodes, is_cycle, log_)
        for e in got:
            T.add(*e)
        added += len(got)

    st = F2MStats(st.k, st.p, st.cP, z)
    deg1 = len(T.degree_one())
    if deg1 != st.k - 2 * added:
        raise BoundViolation("degree-one count disagrees with the number of added edges")
    if 3 * added < R - z:
        raise BoundViolation(f"added {added} cycle edges, expected at least ({R} - {z})/3")
    if 3 * deg1 > st.k + 2 * st.p + 2 * z:
        raise BoundViolation(f"{deg1} degree-one nodes exceeds (k + 2p + 2z)/3")
    if 2 * non_eared_ok < non_eared:
        log.warning("edge added from only %d of %d non-eared P1 paths", non_eared_ok, non_eared)
    tour = complete_partial_tour(inst, T)
    x_cost = x.cost_under(inst)
    if tour.cost > Fraction(7, 6) * x_cost:
        raise BoundViolation(f"tour cost {tour.cost} exceeds 7/6 * {x_cost}")
    return TourBuild(tour, st, R, added, deg1, len(p1), non_eared, non_eared_ok, x_cost,
                     log_ or [])


def build_tour_76(inst: Instance, x: FracSolution, trace: Optional[list] = None) -> Tour:
    """Tour of cost at most 7/6 times a connected fractional F2M solution."""
    res = run_tour_76(inst, x, trace=trace is not None)
    if trace is not None:
        trace.extend(res.trace)
    return res.tour


def build_tour_109_check(inst: Instance, x: FracSolution, trace: Optional[list] = None) -> Tour:
    """The same construction on a 2-connected canonical F2M; cost <= 10/9 cost(x)."""
    dec = decompose(x)
    if dec.integer_cycles or len(dec.fractional_components) != 1:
        raise PreconditionError("x is not a connected fractional F2M solution")
    if not is_canonical(inst, x):
        raise PreconditionError("x is not canonical")
    if not is_two_connected(x):
        raise PreconditionError("x is not 2-connected")
    res = run_tour_76(inst, x, trace=trace is not None)
    if trace is not None:
        trace.extend(res.trace)
    st = res.stats
    if st.z_eared != 0:
        raise BoundViolation("2-connected F2M solution has an eared path")
    if st.cP < st.k - 2 * st.p:
        raise BoundViolation("canonical F2M solution has c(P) < k - 2p")
    if res.tour.cost > Fraction(10, 9) * res.x_cost:
        raise BoundViolation(f"tour cost {res.tour.cost} exceeds 10/9 * {res.x_cost}")
    return res.tour


# -- cycle covers -------------------------------------------------------------

def _cycle_cost(inst: Instance, c: Sequence[int]) -> int:
    return sum(inst.cost(c[i], c[(i + 1) % len(c)]) for i in range(len(c)))


@dataclass(frozen=True)
class CycleCover:
    cycles: tuple
    cost: int
    pure: tuple

    def to_json(self) -> dict:
        return {"cycles": [list(c) for c in self.cycles], "cost": self.cost}


def make_cover(inst: Instance, cycles) -> CycleCover:
    cycles = tuple(tuple(c) for c in cycles)
    seen = [u for c in cycles for u in c]
    if sorted(seen) != list(range(inst.n)):
        raise PreconditionError("cycles do not partition the nodes")
    if any(len(c) < 3 for c in cycles):
        raise PreconditionError("every cycle needs at least three nodes")
    pure = tuple(all(inst.cost(c[i], c[(i + 1) % len(c)]) == 1 for i in range(len(c)))
                 for c in cycles)
    return CycleCover(cycles, sum(_cycle_cost(inst, c) for c in cycles), pure)


def stitch_cycles(inst: Instance, cover: CycleCover) -> Tour:
    """Drop the dearest edge of every cycle and chain the paths into a tour."""
    if len(cover.cycles) == 1:
        return make_tour(inst, cover.cycles[0])
    order = []
    dropped = 0
    for c in cover.cycles:
        m = len(c)
        costs = [inst.cost(c[i], c[(i + 1) % m]) for i in range(m)]
        i = costs.index(max(costs))
        dropped += costs[i]
        path = [c[(i + 1 + t) % m] for t in range(m)]  # from c[i+1] round to c[i]
        if order and inst.cost(order[-1], path[0]) > inst.cost(order[-1], path[-1]):
            path.reverse()
        order.extend(path)
    tour = make_tour(inst, order)
    if tour.cost > cover.cost - dropped + 2 * len(cover.cycles):
        raise BoundViolation("stitched tour exceeds cover cost - dropped + 2 * #cycles")
    if 3 * tour.cost > 4 * cover.cost:
        raise BoundViolation(f"stitched tour {tour.cost} exceeds 4/3 * {cover.cost}")
    return tour


def _heavy_edges(inst: Instance, c: Sequence[int]) -> list:
    m = len(c)
    return [i for i in range(m) if inst.cost(c[i], c[(i + 1) % m]) == 2]


def _open_at(c: Sequence[int], i: int) -> list:
    """Cycle ``c`` with edge (c[i], c[i+1]) removed, as a path from c[i+1] to c[i]."""
    m = len(c)
    return [c[(i + 1 + t) % m] for t in range(m)]


def _merge_step(inst: Instance, cycles: list):
    impure = [ci for ci, c in enumerate(cycles) if _heavy_edges(inst, c)]
    if len(impure) >= 2:
        a, b = impure[0], impure[1]
        pa = _open_at(cycles[a], _heavy_edges(inst, cycles[a])[0])
        pb = _open_at(cycles[b], _heavy_edges(inst, cycles[b])[0])
        straight = pa + pb
        crossed = pa + pb[::-1]
        new = min((straight, crossed), key=lambda c: _cycle_cost(inst, c))
        rest = [c for ci, c in enumerate(cycles) if ci not in (a, b)]
        return rest + [new]
    if len(impure) == 1:
        a = impure[0]
        c = cycles[a]
        m = len(c)
        where = {u: ci for ci, cyc in enumerate(cycles) for u in cyc}
        for h in _heavy_edges(inst, c):
            for u, other in ((c[h], c[(h + 1) % m]), (c[(h + 1) % m], c[h])):
                js = [j for j in inst.neighbors(u) if where[j] != a]
                if not js:
                    continue
                j = js[0]
                d = where[j]
                cyc = cycles[d]
                k, md = cyc.index(j), len(cyc)
                j2 = min((cyc[(k + 1) % md], cyc[k - 1]), key=lambda w: (inst.cost(other, w), w))
                # c opened at its cost-2 edge runs other..u; then u-j, round cyc to j2, close j2-other.
                pc = _open_at(c, h)
                if pc[0] != other:
                    pc.reverse()
                if cyc[(k + 1) % md] == j2:
                    pd = [cyc[(k - t) % md] for t in range(md)]
                else:
                    pd = [cyc[(k + t) % md] for t in range(md)]
                rest = [cy for ci, cy in enumerate(cycles) if ci not in (a, d)]
                return rest + [pc + pd]
    return None


def normalize_2m(inst: Instance, cover: CycleCover) -> CycleCover:
    """Merge cycles until at most one is non-pure and it has no cost-1 edge
    from a cost-2-incident node into a pure cycle.  Cost never increases."""
    cycles = [list(c) for c in cover.cycles]
    while True:
        nxt = _merge_step(inst, cycles)
        if nxt is None:
            break
        before = sum(_cycle_cost(inst, c) for c in cycles)
        if sum(_cycle_cost(inst, c) for c in nxt) > before:
            raise BoundViolation("normalisation step increased the cost")
        cycles = nxt
    return make_cover(inst, cycles)


def is_normalized(inst: Instance, cover: CycleCover) -> bool:
    return _merge_step(inst, [list(c) for c in cover.cycles]) is None


@dataclass(frozen=True)
class MatchResult:
    """Maximum matching between pure cycles and outside nodes.

    ``pure_cycles`` lists the indices of the cycles taking part; a pure cycle
    through every node has no outside and is left out.  ``matching`` maps a
    cycle index to its matched node; ``cover_cycles`` and ``cover_nodes``
    form a minimum vertex cover of the same size.
    """

    pure_cycles: tuple
    matching: dict
    r: int
    cover_cycles: frozenset
    cover_nodes: frozenset


def _hopcroft_karp(left: list, adj: dict) -> dict:
    match_l = {u: None for u in left}
    match_r = {}
    inf = float("inf")
    while True:
        dist = {}
        queue = []
        for u in left:
            if match_l[u] is None:
                dist[u] = 0
                queue.append(u)
        found = False
        qi = 0
        while qi < len(queue):
            u = queue[qi]
            qi += 1
            for v in adj[u]:
                w = match_r.get(v)
                if w is None:
                    found = True
                elif w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        if not found:
            return match_l

        def dfs(u):
            for v in adj[u]:
                w = match_r.get(v)
                if w is None or (dist.get(w) == dist[u] + 1 and dfs(w)):
                    match_l[u] = v
                    match_r[v] = u
                    return True
            dist[u] = inf
            return False

        for u in left:
            if match_l[u] is None:
                dfs(u)


def pure_cycle_matching(inst: Instance, cover: CycleCover) -> MatchResult:
    """Match pure cycles to nodes outside them reachable by a cost-1 edge."""
    pure = [ci for ci, c in enumerate(cover.cycles) if cover.pure[ci] and len(c) < inst.n]
    adj = {}
    for ci in pure:
        members = set(cover.cycles[ci])
        reach = set()
        for u in members:
            reach.update(w for w in inst.neighbors(u) if w not in members)
        adj[ci] = sorted(reach)
    match_l = _hopcroft_karp(pure, adj)
    matching = {ci: v for ci, v in match_l.items() if v is not None}
    match_r = {v: ci for ci, v in matching.items()}
    # Koenig: Z = vertices reachable from unmatched cycles by alternating paths.
    z_left = {ci for ci in pure if ci not in matching}
    z_right = set()
    stack = list(z_left)
    while stack:
        ci = stack.pop()
        for v in adj[ci]:
            if v in z_right or matching.get(ci) == v:
                continue
            z_right.add(v)
            w = match_r.get(v)
            if w is not None and w not in z_left:
                z_left.add(w)
                stack.append(w)
    cover_cycles = frozenset(ci for ci in pure if ci not in z_left)
    cover_nodes = frozenset(z_right)
    if len(cover_cycles) + len(cover_nodes) != len(matching):
        raise AssertionError("vertex cover size differs from matching size")
    return MatchResult(tuple(pure), matching, len(pure) - len(matching), cover_cycles, cover_nodes)


# -- general F2M solutions ----------------------------------------------------

def tour_from_f2m(inst: Instance, x: FracSolution) -> Tour:
    """Tour from any basic F2M: each fractional component becomes a cycle
    through the partial-tour construction, integer cycles are kept, and the
    cycles are stitched together."""
    dec = decompose(x)
    cycles = [list(c) for c in dec.integer_cycles]
    for comp in dec.fractional_components:
        nodes = sorted(comp.nodes())
        index = {u: i for i, u in enumerate(nodes)}
        sub = Instance(len(nodes), frozenset(
            edge(index[a], index[b]) for a, b in inst.ones if a in index and b in index))
        sub_x = FracSolution.from_values(
            sub, {edge(index[a], index[b]): v for (a, b), v in x.x.items() if a in index})
        t = build_tour_76(sub, sub_x)
        cycles.append([nodes[i] for i in t.order])
    return stitch_cycles(inst, make_cover(inst, cycles))
