"""Random connected fractional 2-matching vertices for property tests.

A half-integral point whose x=1/2 edges form node-disjoint odd cycles and
whose x=1 edges form paths pairing up the cycle nodes is a vertex of the
fractional 2-matching polytope, so these can be built directly.
"""

from __future__ import annotations

import random
from fractions import Fraction

from tsp12.instance import Instance, all_edges, edge
from tsp12.subtour import FracSolution

H = Fraction(1, 2)


def random_f2m(rng: random.Random, cycles=(2, 4), lengths=(3, 5), max_inner=2):
    """Return ``(n, x)`` for a random single fractional component."""
    while True:
        c = rng.choice(cycles)
        sizes = [rng.choice(range(lengths[0], lengths[1] + 1, 2)) for _ in range(c)]
        rings, nxt = [], 0
        for s in sizes:
            rings.append(list(range(nxt, nxt + s)))
            nxt += s
        ring_of = {u: k for k, r in enumerate(rings) for u in r}
        ends = list(range(nxt))
        rng.shuffle(ends)
        pairs = list(zip(ends[::2], ends[1::2]))
        parent = list(range(c))

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        for a, b in pairs:
            parent[find(ring_of[a])] = find(ring_of[b])
        if len({find(k) for k in range(c)}) != 1:
            continue
        x = {}
        for r in rings:
            for i in range(len(r)):
                x[edge(r[i], r[(i + 1) % len(r)])] = H
        for a, b in pairs:
            inner = rng.randint(0, max_inner)
            if inner == 0 and edge(a, b) in x:
                inner = 1
            path = [a] + list(range(nxt, nxt + inner)) + [b]
            nxt += inner
            for u, v in zip(path, path[1:]):
                x[edge(u, v)] = Fraction(1)
        n = nxt
        perm = list(range(n))
        rng.shuffle(perm)
        return n, {edge(perm[u], perm[v]): val for (u, v), val in x.items()}


def random_costs(rng: random.Random, n: int, x: dict, keep=0.7, extra=0.15) -> Instance:
    ones = [e for e in x if rng.random() < keep]
    ones += [e for e in all_edges(n) if e not in x and rng.random() < extra]
    return Instance.from_edges(n, ones)


def random_case(rng: random.Random, **kw):
    n, xv = random_f2m(rng, **kw)
    inst = random_costs(rng, n, xv)
    return inst, FracSolution.from_values(inst, xv)
