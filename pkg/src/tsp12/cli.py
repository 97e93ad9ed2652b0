"""Command-line entry point: ``tsp12 <verb> ...`` prints a JSON report.

Exit codes: 0 success, 2 infeasible input or failed precondition,
3 structural error, 4 pivot or node budget exhausted.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from fractions import Fraction

from . import costsearch, dualcert, enumerate as enum_mod, f2m, instance as inst_mod, subtour, tourbuild
from .instance import Instance, TransformNotApplicable, held_karp_opt
from .ratlp import InfeasibleLP, PivotBudgetExceeded, fmt_rat, parse_rat, verify_optimality
from .subtour import FracSolution, NodeBudgetExceeded

EXIT_OK, EXIT_PRECONDITION, EXIT_STRUCTURE, EXIT_BUDGET = 0, 2, 3, 4


class VerificationFailed(RuntimeError):
    """An independent recheck disagreed with the primary result."""


def git_blob_hash(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _read_json(path: str) -> tuple:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return json.loads(raw), raw
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from None


def load_instance(path: str) -> tuple:
    data, raw = _read_json(path)
    return Instance.from_json(data), git_blob_hash(raw)


def _check(cond: bool, what: str):
    if not cond:
        raise VerificationFailed(what)


def _verify_lp(inst: Instance, x: FracSolution) -> dict:
    out = {}
    if x.lp is not None:
        _check(verify_optimality(x.lp), "simplex optimality certificate does not check")
        out["optimality_certificate"] = True
    if inst.n <= 16:
        value, _ = subtour.exhaustive_min_subtour_cut(x)
        _check(value is None or value >= 2, f"exhaustive search found a cut of value {value}")
        out["exhaustive_cuts"] = True
    return out


def cmd_lp(args) -> dict:
    inst, h = load_instance(args.instance)
    x, cuts = subtour.solve_subtour_lp(inst)
    rep = {"instance_hash": h, **x.to_json()}
    if args.verify:
        rep["verified"] = _verify_lp(inst, x)
    return rep


def cmd_ip(args) -> dict:
    inst, h = load_instance(args.instance)
    cost, tour = subtour.solve_tsp_ip(inst)
    rep = {"instance_hash": h, "cost": cost, "tour": tour.to_json()}
    if args.verify:
        hk, _ = held_karp_opt(inst)
        _check(hk == cost, f"Held-Karp gives {hk}, branch-and-bound gives {cost}")
        rep["verified"] = {"held_karp": hk}
    return rep


def cmd_f2m(args) -> dict:
    inst, h = load_instance(args.instance)
    x = subtour.solve_f2m_lp(inst)
    if args.canonicalize:
        x = f2m.canonicalize(inst, x)
    dec = f2m.decompose(x)
    st = f2m.stats(inst, x)
    rep = {"instance_hash": h, "objective": fmt_rat(x.cost_under(inst)),
           "x": x.to_json()["x"], "decomposition": dec.to_json(),
           "stats": {"k": st.k, "p": st.p, "cP": st.cP},
           "canonical": f2m.is_canonical(inst, x), "two_connected": f2m.is_two_connected(x)}
    if args.verify:
        _check(f2m.reassemble(dec) == dict(x.x), "decomposition does not reassemble to x")
        if x.lp is not None:
            _check(verify_optimality(x.lp), "simplex optimality certificate does not check")
        rep["verified"] = {"reassembly": True}
    return rep


def _cover(inst: Instance):
    cost, cycles = subtour.solve_min_2m(inst)
    return tourbuild.make_cover(inst, cycles)


def cmd_two_match(args) -> dict:
    inst, h = load_instance(args.instance)
    cover = _cover(inst)
    if args.normalize:
        cover = tourbuild.normalize_2m(inst, cover)
    match = tourbuild.pure_cycle_matching(inst, cover)
    rep = {"instance_hash": h, **cover.to_json(),
           "pure": list(cover.pure), "r": match.r,
           "normalized": tourbuild.is_normalized(inst, cover)}
    if args.verify:
        lower = subtour.solve_f2m_lp(inst).objective
        hk, _ = held_karp_opt(inst)
        _check(lower <= cover.cost <= hk, "2-matching cost outside [F2M LP, optimal tour]")
        rep["verified"] = {"f2m_lp": fmt_rat(lower), "held_karp": hk}
    return rep


def cmd_tour(args) -> dict:
    inst, h = load_instance(args.instance)
    trace = [] if args.trace else None
    if args.method == "stitch":
        cover = _cover(inst)
        tour = tourbuild.stitch_cycles(inst, cover)
        basis = Fraction(cover.cost)
    else:
        x = subtour.solve_f2m_lp(inst)
        if args.method == "109":
            x = f2m.canonicalize(inst, x)
            tour = tourbuild.build_tour_109_check(inst, x, trace)
        elif args.method == "76":
            tour = tourbuild.build_tour_76(inst, x, trace)
        else:
            tour = tourbuild.tour_from_f2m(inst, x)
        basis = x.cost_under(inst)
    rep = {"instance_hash": h, "method": args.method, "tour": tour.to_json(),
           "basis_cost": fmt_rat(basis), "ratio": fmt_rat(tour.cost / basis)}
    if trace is not None:
        rep["trace"] = trace
    if args.verify:
        inst_mod.check_tour(inst, tour)
        hk, _ = held_karp_opt(inst)
        _check(hk <= tour.cost, "tour cheaper than the Held-Karp optimum")
        rep["verified"] = {"held_karp": hk}
    return rep


def cmd_dual(args) -> dict:
    inst, h = load_instance(args.instance)
    if args.check:
        data, _ = _read_json(args.check)
        cert = dualcert.DualCertificate.from_json(data)
        value = dualcert.verify_dual(inst, cert)
        rep = {"instance_hash": h, "feasible": True, "value": fmt_rat(value)}
    else:
        cover = tourbuild.normalize_2m(inst, _cover(inst))
        match = tourbuild.pure_cycle_matching(inst, cover)
        cert = dualcert.build_dual(inst, cover, match)
        value = dualcert.verify_dual(inst, cert)
        rep = {"instance_hash": h, "r": match.r, "certificate": cert.to_json()}
    if args.verify:
        x, _ = subtour.solve_subtour_lp(inst)
        _check(value <= x.objective, f"certified bound {value} exceeds the LP value {x.objective}")
        rep["verified"] = {"subtour_lp": fmt_rat(x.objective)}
    return rep


def cmd_enum(args) -> dict:
    if args.action == "count":
        count = sum(1 for _ in enum_mod.gen_biconnected(args.n))
        rep = {"n": args.n, "count": count}
        if args.verify:
            if args.n > 7:
                raise ValueError("--verify for enum count uses the orderly generator, n <= 7")
            other = len(enum_mod.gen_biconnected_orderly(args.n))
            _check(other == count, f"orderly generator finds {other} graphs")
            rep["verified"] = {"orderly": other}
        return rep
    report = enum_mod.gap_sweep(args.n, args.workers, args.checkpoint)
    rep = report.to_json()
    if args.verify:
        worst = Instance.from_json(rep["worst"]["instance"])
        x, _ = subtour.solve_subtour_lp(worst)
        hk, _ = held_karp_opt(worst)
        _check(Fraction(hk) / x.objective == report.worst.ratio, "worst record does not reproduce")
        rep["verified"] = {"worst_held_karp": hk, "worst_lp": fmt_rat(x.objective)}
    return rep


def cmd_cost_search(args) -> dict:
    data, raw = _read_json(args.vertex)
    x = FracSolution.from_json(data, args.n)
    if not subtour.is_subtour_feasible(x):
        raise costsearch.InvalidVertex("vertex is not subtour-feasible")
    if not subtour.is_extreme(x):
        raise costsearch.InvalidVertex("point is feasible but not a vertex (tight rows lack full rank)")
    alpha = parse_rat(args.alpha)
    res = costsearch.search(x, alpha, args.cap)
    inst = res.instance(x.n)
    rep = {"vertex_hash": git_blob_hash(raw), "alpha": fmt_rat(alpha),
           "objective": fmt_rat(res.objective), "instance": inst.to_json(),
           "witness_tour": res.witness_tour.to_json(), "generated_tours": res.generated_tours,
           "nodes": res.nodes}
    if args.verify:
        if x.n <= 7:
            val, _ = costsearch.brute_force_worst_costs(x, alpha)
            _check(val == res.objective, f"exhaustive oracle gives {val}")
            rep["verified"] = {"exhaustive": fmt_rat(val)}
        else:
            hk, _ = held_karp_opt(inst)
            _check(hk - alpha * x.cost_under(inst) == res.objective, "witness objective does not recheck")
            rep["verified"] = {"held_karp": hk}
    return rep


def cmd_oracle(args) -> dict:
    inst, h = load_instance(args.instance)
    cost, tour = held_karp_opt(inst)
    rep = {"instance_hash": h, "cost": cost, "tour": tour.to_json()}
    if args.verify:
        if inst.n > 10:
            raise ValueError("--verify for oracle enumerates permutations, n <= 10")
        bf = inst_mod.brute_force_opt(inst)
        _check(bf == cost, f"permutation search gives {bf}")
        rep["verified"] = {"brute_force": bf}
    return rep


def cmd_transform(args) -> dict:
    inst, h = load_instance(args.instance)
    rep = {"instance_hash": h, "kind": args.kind}
    if args.kind == "connectify":
        out = inst_mod.connectify(inst)
    elif args.kind == "biconnectify":
        out = inst_mod.biconnectify(inst)
    elif args.kind == "biconnected":
        out = inst_mod.make_biconnected(inst)
    else:
        x, _ = subtour.solve_subtour_lp(inst)
        out, y = inst_mod.reroute_through_absorber(inst, x)
        rep["rerouted"] = y.to_json()
    rep["instance"] = out.to_json()
    if args.verify:
        a, _ = subtour.solve_subtour_lp(inst)
        b, _ = subtour.solve_subtour_lp(out)
        checks = {"lp_before": fmt_rat(a.objective), "lp_after": fmt_rat(b.objective)}
        if args.kind != "absorber":
            _check(b.objective <= a.objective, "transform raised the subtour LP value")
            if out.n <= inst_mod.MAX_HELD_KARP:
                oa, ob = held_karp_opt(inst)[0], held_karp_opt(out)[0]
                _check(ob >= oa, "transform lowered the optimal tour")
                checks.update(opt_before=oa, opt_after=ob)
        else:
            y = FracSolution.from_json(rep["rerouted"], out.n)
            _check(subtour.is_subtour_feasible(y), "rerouted solution is not subtour-feasible")
            _check(y.cost_under(out) == a.objective, "rerouting changed the cost")
        rep["verified"] = checks
    return rep


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsp12", description=__doc__.splitlines()[0])
    p.add_argument("--out", help="also write the JSON report to this file")
    p.add_argument("-v", "--log-level", default="WARNING")
    sub = p.add_subparsers(dest="verb", required=True)

    def verb(name, func, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--verify", action="store_true", help="recheck with an independent method")
        s.add_argument("--out", dest="out_sub", help="also write the JSON report to this file")
        s.set_defaults(func=func)
        return s

    def with_instance(s):
        s.add_argument("--instance", required=True, help="instance JSON file")
        return s

    with_instance(verb("lp", cmd_lp, "solve the subtour LP exactly"))
    with_instance(verb("ip", cmd_ip, "optimal tour by branch-and-bound"))
    s = with_instance(verb("f2m", cmd_f2m, "fractional 2-matching vertex and its structure"))
    s.add_argument("--canonicalize", action="store_true")
    s = with_instance(verb("two-match", cmd_two_match, "minimum-cost 2-matching"))
    s.add_argument("--normalize", action="store_true")
    s = with_instance(verb("tour", cmd_tour, "build a tour from a 2-matching relaxation"))
    s.add_argument("--method", choices=["76", "109", "f2m", "stitch"], default="f2m")
    s.add_argument("--trace", action="store_true", help="include per-step augmentation decisions")
    s = with_instance(verb("dual", cmd_dual, "n + r dual certificate"))
    s.add_argument("--check", help="verify this certificate file instead of building one")
    s = verb("enum", cmd_enum, "biconnected graph enumeration and gap sweep")
    s.add_argument("action", choices=["sweep", "count"])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--checkpoint")
    s = verb("cost-search", cmd_cost_search, "worst costs for a fixed subtour vertex")
    s.add_argument("--vertex", required=True, help="FracSolution JSON file")
    s.add_argument("--alpha", required=True, help="ratio as p/q")
    s.add_argument("--n", type=int, help="node count if the vertex file leaves it implicit")
    s.add_argument("--cap", type=int, default=costsearch.SEED_CAP)
    with_instance(verb("oracle", cmd_oracle, "Held-Karp optimum"))
    s = with_instance(verb("transform", cmd_transform, "instance transforms"))
    s.add_argument("kind", choices=["connectify", "biconnectify", "biconnected", "absorber"])
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (PivotBudgetExceeded, NodeBudgetExceeded)):
        return EXIT_BUDGET
    if isinstance(exc, (f2m.StructureError, dualcert.DualInfeasible, enum_mod.CheckpointError,
                        VerificationFailed, AssertionError)):
        return EXIT_STRUCTURE
    if isinstance(exc, (tourbuild.PreconditionError, TransformNotApplicable, InfeasibleLP,
                        costsearch.InvalidVertex, ValueError, KeyError, TypeError, OSError)):
        return EXIT_PRECONDITION
    raise exc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr)
    try:
        rep = args.func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        code = _exit_code(exc)
        err = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, NodeBudgetExceeded):
            err["best"] = None if exc.best is None else str(exc.best)
        print(json.dumps(err), file=sys.stderr)
        return code
    text = json.dumps(rep, indent=2, default=str)
    print(text)
    out = args.out_sub or args.out
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
