"""Isomorph-free biconnected graphs and the integrality-gap sweep.

Connected graphs are grown one vertex at a time by canonical augmentation:
a child is kept only when its new vertex is equivalent to the vertex the
child itself would choose to delete, and isomorphic children of one parent
are merged.  Every biconnected graph on n >= 3 nodes has a connected parent
(any vertex deletion keeps it connected), so filtering the connected level n
for biconnectivity yields one graph per isomorphism class.
"""

from __future__ import annotations

import json
import logging
import multiprocessing
import os
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .canon import canonical_adj, canonical_labelling, edges_to_adj, adj_to_edges, popcount
from .instance import Instance, components, cut_vertices
from .ratlp import fmt_rat, parse_rat
from .subtour import solve_subtour_lp, solve_tsp_ip

log = logging.getLogger(__name__)

MAX_N = 10


class CheckpointError(RuntimeError):
    """The checkpoint file cannot be trusted; the sweep refuses to continue."""


def encode(adj: list) -> str:
    n = len(adj)
    bits = 0
    for u in range(n):
        for v in range(u + 1, n):
            bits = (bits << 1) | (adj[u] >> v & 1)
    width = max(1, (n * (n - 1) // 2 + 3) // 4)
    return f"{n}:{bits:0{width}x}"


def decode(cert: str) -> list:
    n_s, hex_s = cert.split(":")
    n = int(n_s)
    bits = int(hex_s, 16)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = [pairs[i] for i in range(len(pairs)) if bits >> (len(pairs) - 1 - i) & 1]
    return edges_to_adj(n, edges)


@dataclass(frozen=True)
class CanonicalGraph:
    n: int
    edges: tuple
    cert: str

    @classmethod
    def from_adj(cls, adj: list) -> "CanonicalGraph":
        cadj = canonical_adj(adj)
        return cls(len(adj), tuple(adj_to_edges(cadj)), encode(cadj))

    def instance(self) -> Instance:
        return Instance.from_edges(self.n, self.edges)


def _deletion_key(adj: list, v: int) -> tuple:
    return (popcount(adj[v]), tuple(sorted(popcount(adj[w]) for w in range(len(adj)) if adj[v] >> w & 1)))


def _accept(adj: list) -> bool:
    """Is the last vertex of the connected graph ``adj`` its canonical deletion?"""
    n = len(adj)
    new = n - 1
    cuts = cut_vertices(n, adj)
    cand = [v for v in range(n) if v not in cuts]
    keys = {v: _deletion_key(adj, v) for v in cand}
    best = min(keys.values())
    if keys[new] != best:
        return False
    tied = [v for v in cand if keys[v] == best]
    if len(tied) == 1:
        return True
    lab = canonical_labelling(adj)
    pos = lab.position
    chosen = min(tied, key=lambda v: pos[v])
    if lab.orbit[chosen] == lab.orbit[new]:
        return True
    # Fall back to comparing the graph with each vertex singled out.
    others = [v for v in range(n) if v not in (chosen, new)]
    a = canonical_labelling(adj, [[chosen], others + [new]]).cert
    b = canonical_labelling(adj, [[new], others + [chosen]]).cert
    return a == b


def children(parent: list) -> Iterator[list]:
    """Connected graphs on one more vertex whose canonical parent is ``parent``."""
    n = len(parent)
    seen = set()
    for mask in range(1, 1 << n):
        adj = [parent[u] | ((mask >> u & 1) << n) for u in range(n)] + [mask]
        if not _accept(adj):
            continue
        c = canonical_adj(adj)
        key = tuple(c)
        if key in seen:
            continue
        seen.add(key)
        yield c


def gen_connected(n: int) -> list:
    """One canonical adjacency per isomorphism class of connected graphs."""
    if n < 1:
        raise ValueError("n must be positive")
    level = [[0]]
    for _ in range(n - 1):
        level = [c for p in level for c in children(p)]
    return level


def _is_biconnected(adj: list) -> bool:
    n = len(adj)
    return n >= 3 and len(components(n, adj)) == 1 and not cut_vertices(n, adj)


def _check_n(n: int):
    if not 3 <= n <= MAX_N:
        raise ValueError(f"gen_biconnected supports 3 <= n <= {MAX_N}, got {n}")


def gen_biconnected(n: int) -> Iterator[CanonicalGraph]:
    """Stream one representative per class of biconnected graphs on ``n`` nodes."""
    _check_n(n)
    for p in gen_connected(n - 1):
        for c in children(p):
            if _is_biconnected(c):
                yield CanonicalGraph(n, tuple(adj_to_edges(c)), encode(c))


def gen_biconnected_orderly(n: int) -> list:
    """Independent generator for cross-checks: grow edge sets one edge at a
    time, merging isomorphic graphs at every level."""
    if not 3 <= n <= 7:
        raise ValueError("the orderly fallback is meant for 3 <= n <= 7")
    level = {encode(canonical_adj([0] * n)): [0] * n}
    found = {}
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    while level:
        nxt = {}
        for adj in level.values():
            if _is_biconnected(adj):
                found[encode(adj)] = adj
            for u, v in pairs:
                if adj[u] >> v & 1:
                    continue
                b = list(adj)
                b[u] |= 1 << v
                b[v] |= 1 << u
                c = canonical_adj(b)
                nxt.setdefault(encode(c), c)
        level = nxt
    return sorted(found)


# -- gap sweep ----------------------------------------------------------------

@dataclass(frozen=True)
class GapRecord:
    cert: str
    lp_value: Fraction
    ip_value: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.ip_value) / self.lp_value

    def to_json(self) -> dict:
        return {"cert": self.cert, "lp": fmt_rat(self.lp_value), "ip": self.ip_value}

    @classmethod
    def from_json(cls, data: dict) -> "GapRecord":
        rec = cls(str(data["cert"]), parse_rat(data["lp"]), int(data["ip"]))
        if rec.lp_value <= 0 or rec.ip_value < rec.lp_value:
            raise ValueError(f"record {data} has lp > ip or a non-positive lp")
        return rec


@dataclass(frozen=True)
class GapReport:
    n: int
    graph_count: int
    worst: GapRecord
    histogram: dict

    def to_json(self) -> dict:
        inst = Instance.from_edges(self.n, adj_to_edges(decode(self.worst.cert)))
        return {
            "n": self.n,
            "count": self.graph_count,
            "worst_ratio": fmt_rat(self.worst.ratio),
            "worst": dict(self.worst.to_json(), ratio=fmt_rat(self.worst.ratio),
                          instance=inst.to_json()),
            "histogram": {k: self.histogram[k] for k in sorted(self.histogram, key=parse_rat)},
        }


def solve_gap(cert: str) -> GapRecord:
    adj = decode(cert)
    inst = Instance.from_edges(len(adj), adj_to_edges(adj))
    x, _ = solve_subtour_lp(inst)
    cost, _ = solve_tsp_ip(inst)
    return GapRecord(cert, x.objective, cost)


def _header(n: int) -> dict:
    return {"kind": "gap_sweep", "n": n}


def read_checkpoint(path: str, n: int) -> dict:
    """Completed records by certificate; raises :class:`CheckpointError` on any damage."""
    done = {}
    if not os.path.exists(path):
        return done
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    elif lines:
        raise CheckpointError(f"{path}: last line is not newline-terminated (interrupted write?)")
    if not lines:
        return done
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}:1: header is not JSON ({exc})") from None
    if head != _header(n):
        raise CheckpointError(f"{path}:1: header {head} does not match a sweep for n={n}")
    for no, line in enumerate(lines[1:], start=2):
        try:
            rec = GapRecord.from_json(json.loads(line))
            if not rec.cert.startswith(f"{n}:"):
                raise ValueError(f"certificate {rec.cert} is not for n={n}")
        except (ValueError, KeyError, TypeError) as exc:
            raise CheckpointError(f"{path}:{no}: bad record ({exc})") from None
        if rec.cert in done and done[rec.cert] != rec:
            raise CheckpointError(f"{path}:{no}: conflicting records for {rec.cert}")
        done[rec.cert] = rec
    return done


def _work(args) -> tuple:
    parents, n, skip = args
    emitted, solved = [], []
    for p in parents:
        for c in children(p):
            if not _is_biconnected(c):
                continue
            cert = encode(c)
            emitted.append(cert)
            if cert not in skip:
                solved.append(solve_gap(cert))
    return emitted, solved


def _best(a: Optional[GapRecord], b: GapRecord) -> GapRecord:
    if a is None:
        return b
    return b if (b.ratio, a.cert) > (a.ratio, b.cert) else a


def gap_sweep(n: int, workers: int = 1, checkpoint: Optional[str] = None) -> GapReport:
    """Worst IP/LP ratio over all biconnected cost-1 graphs on ``n`` nodes.

    With a checkpoint, finished certificates are appended one per line and a
    rerun solves only the rest.  The report does not depend on ``workers``.
    """
    _check_n(n)
    done = read_checkpoint(checkpoint, n) if checkpoint else {}
    parents = gen_connected(n - 1)
    chunks = [parents[i::max(1, workers) * 8] for i in range(max(1, workers) * 8)]
    chunks = [c for c in chunks if c]
    skip = frozenset(done)

    out = None
    if checkpoint:
        fresh = not os.path.exists(checkpoint) or os.path.getsize(checkpoint) == 0
        out = open(checkpoint, "a", encoding="utf-8")
        if fresh:
            out.write(json.dumps(_header(n)) + "\n")
            out.flush()
    emitted = []
    records = dict(done)
    try:
        if workers > 1:
            ctx = multiprocessing.get_context("fork" if hasattr(os, "fork") else "spawn")
            with ctx.Pool(workers) as pool:
                results = pool.imap_unordered(_work, [(c, n, skip) for c in chunks])
                for em, solved in results:
                    emitted.extend(em)
                    _record(out, records, solved)
        else:
            for c in chunks:
                em, solved = _work((c, n, skip))
                emitted.extend(em)
                _record(out, records, solved)
    finally:
        if out:
            out.close()

    if len(set(emitted)) != len(emitted):
        raise AssertionError("generator emitted a class twice")
    stray = set(records) - set(emitted)
    if stray:
        raise CheckpointError(f"checkpoint holds {len(stray)} certificates the generator never emits")
    worst = None
    hist = Counter()
    for cert in emitted:
        rec = records[cert]
        worst = _best(worst, rec)
        hist[fmt_rat(rec.ratio)] += 1
    return GapReport(n, len(emitted), worst, dict(hist))


def _record(out, records: dict, solved: list):
    for rec in solved:
        records[rec.cert] = rec
        if out:
            out.write(json.dumps(rec.to_json()) + "\n")
    if out:
        out.flush()
