"""Structure of basic fractional 2-matchings.

A basic F2M splits into integer components (a cycle of x=1 edges) and
fractional components: odd cycles of x=1/2 edges whose nodes are joined in
pairs by paths of x=1 edges ("1-paths").
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .instance import Instance, edge
from .subtour import FracSolution, stoer_wagner

HALF = Fraction(1, 2)


class StructureError(ValueError):
    """The solution is not a basic fractional 2-matching."""


@dataclass(frozen=True)
class FractionalComponent:
    half_cycles: tuple
    one_paths: tuple

    def nodes(self) -> set:
        out = set()
        for c in self.half_cycles:
            out.update(c)
        for p in self.one_paths:
            out.update(p)
        return out


@dataclass(frozen=True)
class F2MDecomposition:
    integer_cycles: tuple
    fractional_components: tuple

    @property
    def connected(self) -> bool:
        return len(self.integer_cycles) + len(self.fractional_components) == 1

    def to_json(self) -> dict:
        return {
            "integer_cycles": [list(c) for c in self.integer_cycles],
            "fractional_components": [
                {"half_cycles": [list(c) for c in comp.half_cycles],
                 "one_paths": [list(p) for p in comp.one_paths]}
                for comp in self.fractional_components
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "F2MDecomposition":
        return cls(
            tuple(tuple(c) for c in data["integer_cycles"]),
            tuple(FractionalComponent(tuple(tuple(c) for c in comp["half_cycles"]),
                                      tuple(tuple(p) for p in comp["one_paths"]))
                  for comp in data["fractional_components"]),
        )


@dataclass(frozen=True)
class F2MStats:
    k: int
    p: int
    cP: int
    z_eared: int = 0


def _orient_cycle(cyc: list) -> tuple:
    """Rotate to the smallest node, then step towards its smaller neighbour."""
    i = cyc.index(min(cyc))
    cyc = cyc[i:] + cyc[:i]
    if len(cyc) > 2 and cyc[-1] < cyc[1]:
        cyc = [cyc[0]] + cyc[:0:-1]
    return tuple(cyc)


def _walk_cycles(nodes, nbrs) -> list:
    seen = set()
    out = []
    for s in sorted(nodes):
        if s in seen:
            continue
        cyc = [s]
        seen.add(s)
        prev, cur = s, nbrs[s][0]
        while cur != s:
            cyc.append(cur)
            seen.add(cur)
            a, b = nbrs[cur]
            prev, cur = cur, (b if a == prev else a)
        out.append(_orient_cycle(cyc))
    return out


def decompose(x: FracSolution) -> F2MDecomposition:
    """Split a basic F2M solution into integer and fractional components.

    Raises :class:`StructureError` naming the offending part when ``x`` is not
    a vertex of the fractional 2-matching polytope.
    """
    n = x.n
    half = {i: [] for i in range(n)}
    one = {i: [] for i in range(n)}
    for (u, v), val in x.x.items():
        if val == HALF:
            half[u].append(v)
            half[v].append(u)
        elif val == 1:
            one[u].append(v)
            one[v].append(u)
        else:
            raise StructureError(f"edge {(u, v)} has value {val}, expected 1/2 or 1")
    for i in range(n):
        deg = Fraction(len(half[i]), 2) + len(one[i])
        if deg != 2:
            raise StructureError(f"node {i} has degree {deg}")
        if len(half[i]) not in (0, 2):
            raise StructureError(f"node {i} lies on {len(half[i]) // 2} half-cycles")

    cycle_nodes = [i for i in range(n) if half[i]]
    half_cycles = _walk_cycles(cycle_nodes, half)
    for c in half_cycles:
        if len(c) % 2 == 0:
            raise StructureError(f"half-cycle {list(c)} is even")
    cycle_of = {u: ci for ci, c in enumerate(half_cycles) for u in c}

    # 1-paths start at a cycle node (one-degree 1); integer cycles are the rest.
    paths = []
    used = set()
    for s in cycle_nodes:
        if s in used:
            continue
        path = [s]
        prev, cur = s, one[s][0]
        while half[cur] == []:
            path.append(cur)
            a, b = one[cur]
            prev, cur = cur, (b if a == prev else a)
        path.append(cur)
        used.add(s)
        used.add(cur)
        if path[0] > path[-1]:
            path.reverse()
        paths.append(tuple(path))
    on_path = {u for p in paths for u in p}
    rest = [i for i in range(n) if i not in on_path]
    integer_cycles = _walk_cycles(rest, one)
    for c in integer_cycles:
        if len(c) < 3:
            raise StructureError(f"integer cycle {list(c)} is too short")

    parent = list(range(len(half_cycles)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for p in paths:
        a, b = find(cycle_of[p[0]]), find(cycle_of[p[-1]])
        if a != b:
            parent[max(a, b)] = min(a, b)
    groups = {}
    for ci in range(len(half_cycles)):
        groups.setdefault(find(ci), []).append(ci)
    comps = []
    for root in sorted(groups, key=lambda r: min(min(half_cycles[c]) for c in groups[r])):
        members = set(groups[root])
        hc = tuple(sorted((half_cycles[c] for c in members), key=min))
        ps = tuple(sorted((p for p in paths if cycle_of[p[0]] in members), key=lambda p: (p[0], p[-1])))
        comps.append(FractionalComponent(hc, ps))
    dec = F2MDecomposition(tuple(sorted(integer_cycles, key=min)), tuple(comps))
    if reassemble(dec) != dict(x.x):
        raise StructureError("decomposition does not reproduce the solution")
    return dec


def reassemble(dec: F2MDecomposition) -> dict:
    x = {}
    for c in dec.integer_cycles:
        for i in range(len(c)):
            x[edge(c[i], c[(i + 1) % len(c)])] = Fraction(1)
    for comp in dec.fractional_components:
        for c in comp.half_cycles:
            for i in range(len(c)):
                x[edge(c[i], c[(i + 1) % len(c)])] = HALF
        for p in comp.one_paths:
            for a, b in zip(p, p[1:]):
                x[edge(a, b)] = Fraction(1)
    return x


def stats(inst: Instance, x: FracSolution) -> F2MStats:
    """Cycle-node count, cost-2 cycle edges and 1-path cost of ``x``."""
    k = sum(1 for i in range(x.n) if any(v == HALF for e, v in x.x.items() if i in e))
    p = sum(1 for e, v in x.x.items() if v == HALF and inst.cost(*e) == 2)
    cP = sum(inst.cost(*e) for e, v in x.x.items() if v == 1)
    return F2MStats(k, p, cP)


def is_two_connected(x: FracSolution) -> bool:
    """Every cut of the x-weighted support carries at least 2."""
    if x.n < 2:
        return True
    return stoer_wagner(x.n, x.x)[0] >= 2


def _cycle_from(c: tuple, start: int) -> list:
    i = c.index(start)
    return list(c[i:] + c[:i])


def _rewire_candidates(inst: Instance, dec: F2MDecomposition) -> list:
    out = []
    for comp in dec.fractional_components:
        cyc_of = {u: c for c in comp.half_cycles for u in c}
        for p in comp.one_paths:
            if len(p) != 2 or inst.cost(p[0], p[1]) != 1:
                continue
            u, v = p
            cu, cv = cyc_of[u], cyc_of[v]
            if cu == cv:
                continue
            ok = True
            for w, c in ((u, cu), (v, cv)):
                ring = _cycle_from(c, w)
                if inst.cost(w, ring[1]) != 1 or inst.cost(w, ring[-1]) != 1:
                    ok = False
            if ok:
                out.append((edge(u, v), cu, cv))
    return sorted(out)


def is_canonical(inst: Instance, x: FracSolution) -> bool:
    """No cost-1 single-edge 1-path joins two odd cycles at cost-1 cycle edges."""
    return not _rewire_candidates(inst, decompose(x))


def _rewire(inst: Instance, x: dict, cand) -> tuple:
    (u, v), cu, cv = cand
    y = dict(x)
    del y[(u, v)]
    for w, c in ((u, cu), (v, cv)):
        ring = _cycle_from(c, w)
        m = len(ring)
        for i in range(m):
            e = edge(ring[i], ring[(i + 1) % m])
            if i % 2 == 0:
                y[e] = Fraction(1)
            else:
                y.pop(e, None)
    delta = sum((val * inst.cost(*e) for e, val in y.items()), Fraction(0)) - \
        sum((val * inst.cost(*e) for e, val in x.items()), Fraction(0))
    return y, delta


def canonicalize(inst: Instance, x: FracSolution) -> FracSolution:
    """Rewire offending 1-paths until none can be removed without raising the cost.

    Candidates are taken in lexicographic order of their endpoints and the
    solution is re-decomposed after every rewiring.  A candidate whose
    rewiring would increase the objective (possible only when the alternating
    pattern lands on a cost-2 edge further round a cycle) is left in place.
    """
    cur = dict(x.x)
    skipped = set()
    while True:
        sol = FracSolution.from_values(inst, cur)
        dec = decompose(sol)
        for cand in _rewire_candidates(inst, dec):
            if cand[0] in skipped:
                continue
            y, delta = _rewire(inst, cur, cand)
            if delta > 0:
                skipped.add(cand[0])
                continue
            cur = y
            break
        else:
            break
    out = FracSolution.from_values(inst, cur)
    decompose(out)
    if not out.satisfies_degrees() or out.objective > x.cost_under(inst):
        raise AssertionError("canonicalize produced an invalid or more expensive solution")
    return out
