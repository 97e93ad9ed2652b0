"""The combinatorial dual certificate: subtour LP value is at least n + r.

Node duals of 1/2 go to every node outside the vertex cover of the
pure-cycle matching and set duals of 1/2 to every pure cycle outside it;
edge duals stay zero.  ``verify_dual`` checks any certificate against the
subtour dual exactly, edge by edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .instance import Instance, all_edges, edge
from .ratlp import fmt_rat, parse_rat
from .subtour import edge_key, parse_edge_key
from .tourbuild import CycleCover, MatchResult, PreconditionError, is_normalized

HALF = Fraction(1, 2)


class DualInfeasible(ValueError):
    """A certificate breaks a dual constraint."""


@dataclass(frozen=True)
class DualCertificate:
    y_node: dict      # node -> Fraction
    y_set: tuple      # ((frozenset S, Fraction y), ...)
    z_edge: dict      # edge -> Fraction
    value: Fraction

    @staticmethod
    def objective(y_node: dict, y_set, z_edge: dict) -> Fraction:
        return (2 * sum(y_node.values(), Fraction(0))
                + 2 * sum((y for _, y in y_set), Fraction(0))
                - sum(z_edge.values(), Fraction(0)))

    def to_json(self) -> dict:
        return {
            "y_node": {str(i): fmt_rat(v) for i, v in sorted(self.y_node.items())},
            "y_set": [{"S": sorted(S), "y": fmt_rat(y)} for S, y in self.y_set],
            "z": {edge_key(e): fmt_rat(v) for e, v in sorted(self.z_edge.items())},
            "value": fmt_rat(self.value),
        }

    @classmethod
    def from_json(cls, data: dict) -> "DualCertificate":
        y_node = {int(i): parse_rat(v) for i, v in data.get("y_node", {}).items()}
        y_set = tuple((frozenset(item["S"]), parse_rat(item["y"])) for item in data.get("y_set", []))
        z_edge = {parse_edge_key(k): parse_rat(v) for k, v in data.get("z", {}).items()}
        value = parse_rat(data["value"]) if "value" in data else cls.objective(y_node, y_set, z_edge)
        return cls(y_node, y_set, z_edge, value)


def build_dual(inst: Instance, cover: CycleCover, match: MatchResult) -> DualCertificate:
    """Dual solution of value n + r for a normalised cover and its matching."""
    if not is_normalized(inst, cover):
        raise PreconditionError("cover is not normalised; run normalize_2m first")
    y_node = {i: HALF for i in range(inst.n) if i not in match.cover_nodes}
    y_set = tuple((frozenset(cover.cycles[ci]), HALF)
                  for ci in match.pure_cycles if ci not in match.cover_cycles)
    cert = DualCertificate(y_node, y_set, {}, DualCertificate.objective(y_node, y_set, {}))
    if cert.value != inst.n + match.r:
        raise AssertionError(f"dual value {cert.value} differs from n + r = {inst.n + match.r}")
    return cert


def edge_load(cert: DualCertificate, u: int, v: int) -> Fraction:
    load = cert.y_node.get(u, Fraction(0)) + cert.y_node.get(v, Fraction(0))
    for S, y in cert.y_set:
        if (u in S) != (v in S):
            load += y
    return load - cert.z_edge.get(edge(u, v), Fraction(0))


def verify_dual(inst: Instance, cert: DualCertificate) -> Fraction:
    """Check every dual constraint exactly and return the certified lower bound."""
    n = inst.n
    for S, y in cert.y_set:
        if y < 0:
            raise DualInfeasible(f"set dual y({sorted(S)}) = {y} is negative")
        if not 3 <= len(S) <= n - 3 or not all(0 <= u < n for u in S):
            raise DualInfeasible(f"set {sorted(S)} is not a valid subtour set for n={n}")
    for e, z in cert.z_edge.items():
        if z < 0:
            raise DualInfeasible(f"edge dual z{e} = {z} is negative")
    for u, v in all_edges(n):
        load = edge_load(cert, u, v)
        if load > inst.cost(u, v):
            raise DualInfeasible(f"edge ({u}, {v}) has load {fmt_rat(load)} > cost {inst.cost(u, v)}")
    value = DualCertificate.objective(cert.y_node, cert.y_set, cert.z_edge)
    if value != cert.value:
        raise DualInfeasible(f"stated value {fmt_rat(cert.value)} differs from objective {fmt_rat(value)}")
    return value
