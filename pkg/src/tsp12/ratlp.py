"""Exact rational simplex with bounded variables and warm-started resolves.

Values crossing the public API are ``fractions.Fraction``; inside the tableau
they are ``gmpy2.mpq`` (exact, and several times faster).  There is no
floating point anywhere.

The solver keeps a dense tableau ``B^-1 [A | I]`` where every row owns one
slack column (``a.x + s = b``), so an equality row is a row whose slack is
fixed to zero.  Phase 1 is a dual simplex run against a zero objective (every
basis is dual feasible for it); phase 2 is a bounded-variable primal simplex.
Appending a row or tightening a bound keeps the basis dual feasible, so those
resolves go through the dual simplex from the previous optimum.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from gmpy2 import mpq

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, GE, EQ = "<=", ">=", "=="

DEFAULT_PIVOT_BUDGET = 20000


class PivotBudgetExceeded(RuntimeError):
    """Raised when a solve needs more pivots than it was allowed."""


class InfeasibleLP(ValueError):
    """Raised by resolve helpers when the modified LP has no feasible point."""


def pivot_budget() -> int:
    return int(os.environ.get("TSP12_PIVOT_BUDGET", DEFAULT_PIVOT_BUDGET))


def fmt_rat(v) -> str:
    """Render a rational as ``"p/q"``, or ``"k"`` when it is integral."""
    v = Fraction(v)
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def parse_rat(s) -> Fraction:
    if isinstance(s, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    if not isinstance(s, str):
        raise TypeError(f"expected a 'p/q' string, got {type(s).__name__}")
    return Fraction(s.strip())


@dataclass(frozen=True)
class Row:
    """One constraint ``sum coeffs[j] * x_j  rel  rhs``; ``coeffs`` is sparse."""

    coeffs: Mapping[int, Fraction]
    rel: str
    rhs: Fraction

    def __post_init__(self):
        if self.rel not in (LE, GE, EQ):
            raise ValueError(f"unknown relation {self.rel!r}")

    def activity(self, x: Sequence) -> Fraction:
        return sum((Fraction(a) * x[j] for j, a in self.coeffs.items()), Fraction(0))

    def satisfied(self, x: Sequence) -> bool:
        lhs = self.activity(x)
        if self.rel == LE:
            return lhs <= self.rhs
        if self.rel == GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class LinearProgram:
    objective: tuple
    lower: tuple
    upper: tuple
    rows: tuple = ()
    sense: str = "min"

    def __post_init__(self):
        nv = len(self.objective)
        if len(self.lower) != nv or len(self.upper) != nv:
            raise ValueError("bounds and objective disagree on the variable count")
        if self.sense not in ("min", "max"):
            raise ValueError(f"unknown sense {self.sense!r}")
        for lo, hi in zip(self.lower, self.upper):
            if lo is not None and hi is not None and lo > hi:
                raise ValueError("a variable has lower bound above its upper bound")
        for row in self.rows:
            for j in row.coeffs:
                if not 0 <= j < nv:
                    raise ValueError(f"row references variable {j} out of range")

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def with_row(self, row: Row) -> "LinearProgram":
        return LinearProgram(self.objective, self.lower, self.upper, self.rows + (row,), self.sense)

    def with_bounds(self, j: int, lo, hi) -> "LinearProgram":
        lower = list(self.lower)
        upper = list(self.upper)
        lower[j], upper[j] = lo, hi
        return LinearProgram(self.objective, tuple(lower), tuple(upper), self.rows, self.sense)

    def objective_value(self, x: Sequence) -> Fraction:
        return sum((Fraction(c) * v for c, v in zip(self.objective, x)), Fraction(0))

    def is_feasible(self, x: Sequence) -> bool:
        for v, lo, hi in zip(x, self.lower, self.upper):
            if lo is not None and v < lo:
                return False
            if hi is not None and v > hi:
                return False
        return all(row.satisfied(x) for row in self.rows)


def make_lp(objective: Iterable, lower: Iterable, upper: Iterable,
            rows: Iterable[Row] = (), sense: str = "min") -> LinearProgram:
    def conv(v):
        return None if v is None else Fraction(v)
    return LinearProgram(
        tuple(Fraction(c) for c in objective),
        tuple(conv(v) for v in lower),
        tuple(conv(v) for v in upper),
        tuple(Row({j: Fraction(a) for j, a in r.coeffs.items() if a != 0}, r.rel, Fraction(r.rhs))
              for r in rows),
        sense,
    )


@dataclass(frozen=True)
class BasicSolution:
    """Result of a solve.

    ``values`` covers the structural variables only.  ``duals`` holds one
    price per row and ``reduced_costs`` one entry per structural variable,
    both in the sense of the original objective; together with ``values``
    they form the optimality certificate checked by :func:`verify_optimality`.
    """

    status: str
    lp: LinearProgram
    values: tuple = ()
    objective: Optional[Fraction] = None
    basis: tuple = ()
    duals: tuple = ()
    reduced_costs: tuple = ()
    pivots: int = 0
    _state: Optional["_Tableau"] = field(default=None, repr=False, compare=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _q(v):
    return None if v is None else mpq(v)


def _lower_slack(rel):
    return {LE: mpq(0), GE: None, EQ: mpq(0)}[rel]


def _upper_slack(rel):
    return {LE: None, GE: mpq(0), EQ: mpq(0)}[rel]


def _frac(v) -> Fraction:
    v = mpq(v)
    return Fraction(int(v.numerator), int(v.denominator))


class _Tableau:
    """Mutable simplex state.  Never shared; callers copy before mutating."""

    __slots__ = ("nv", "cost", "lb", "ub", "T", "d", "basis", "pos", "val", "rule", "pivots")

    def copy(self) -> "_Tableau":
        t = _Tableau.__new__(_Tableau)
        t.nv = self.nv
        t.cost = list(self.cost)
        t.lb = list(self.lb)
        t.ub = list(self.ub)
        t.T = [list(r) for r in self.T]
        t.d = list(self.d)
        t.basis = list(self.basis)
        t.pos = dict(self.pos)
        t.val = list(self.val)
        t.rule = self.rule
        t.pivots = 0
        return t

    @classmethod
    def build(cls, lp: LinearProgram, rule: str) -> "_Tableau":
        t = cls.__new__(cls)
        nv = lp.num_vars
        m = len(lp.rows)
        t.nv = nv
        sign = 1 if lp.sense == "min" else -1
        t.cost = [mpq(sign * c) for c in lp.objective] + [0] * m
        t.lb = [_q(v) for v in lp.lower] + [_lower_slack(r.rel) for r in lp.rows]
        t.ub = [_q(v) for v in lp.upper] + [_upper_slack(r.rel) for r in lp.rows]
        t.val = []
        for lo, hi in zip(lp.lower, lp.upper):
            t.val.append(mpq(lo if lo is not None else (hi if hi is not None else 0)))
        ncols = nv + m
        t.T = []
        for i, r in enumerate(lp.rows):
            row = [0] * ncols
            for j, a in r.coeffs.items():
                row[j] = mpq(a)
            row[nv + i] = 1
            t.T.append(row)
            t.val.append(mpq(r.rhs) - sum(mpq(a) * t.val[j] for j, a in r.coeffs.items()))
        t.basis = [nv + i for i in range(m)]
        t.pos = {b: i for i, b in enumerate(t.basis)}
        t.d = [0] * ncols
        t.rule = rule
        t.pivots = 0
        return t

    # -- helpers -----------------------------------------------------------

    def _tick(self):
        self.pivots += 1
        if self.pivots > pivot_budget():
            raise PivotBudgetExceeded(f"simplex exceeded the pivot budget of {pivot_budget()}")

    def _can_inc(self, j):
        hi = self.ub[j]
        return hi is None or self.val[j] < hi

    def _can_dec(self, j):
        lo = self.lb[j]
        return lo is None or self.val[j] > lo

    def recompute_d(self):
        cost = self.cost
        d = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.T[i]
                for j, a in enumerate(row):
                    if a:
                        d[j] -= cb * a
        for b in self.basis:
            d[b] = 0
        self.d = d

    def pivot(self, r: int, q: int):
        T = self.T
        prow = T[r]
        piv = prow[q]
        if piv != 1:
            inv = 1 / piv
            prow = [a * inv if a else 0 for a in prow]
            T[r] = prow
        nz = [j for j, a in enumerate(prow) if a]
        for i, row in enumerate(T):
            if i != r:
                f = row[q]
                if f:
                    for j in nz:
                        row[j] -= f * prow[j]
        d = self.d
        f = d[q]
        if f:
            for j in nz:
                d[j] -= f * prow[j]
        old = self.basis[r]
        del self.pos[old]
        self.basis[r] = q
        self.pos[q] = r

    def _shift(self, q: int, delta):
        """Move nonbasic ``q`` by ``delta`` and update the basic values."""
        if not delta:
            return
        val = self.val
        val[q] += delta
        for i, row in enumerate(self.T):
            a = row[q]
            if a:
                val[self.basis[i]] -= a * delta

    # -- primal simplex ----------------------------------------------------

    def primal(self) -> str:
        nv_total = len(self.d)
        while True:
            d = self.d
            q = None
            best = None
            for j in range(nv_total):
                dj = d[j]
                if not dj or j in self.pos:
                    continue
                if (dj < 0 and self._can_inc(j)) or (dj > 0 and self._can_dec(j)):
                    if self.rule == "bland":
                        q = j
                        break
                    mag = abs(dj)
                    if best is None or mag > best:
                        best, q = mag, j
            if q is None:
                return OPTIMAL
            sigma = 1 if d[q] < 0 else -1
            step = None
            leave = None  # row index, or -1 for a bound flip
            lo, hi = self.lb[q], self.ub[q]
            if lo is not None and hi is not None:
                step, leave = hi - lo, -1
            for i, row in enumerate(self.T):
                a = row[q]
                if not a:
                    continue
                b = self.basis[i]
                g = -a * sigma
                if g < 0:
                    if self.lb[b] is None:
                        continue
                    lim = (self.val[b] - self.lb[b]) / -g
                else:
                    if self.ub[b] is None:
                        continue
                    lim = (self.ub[b] - self.val[b]) / g
                if step is None or lim < step or (lim == step and leave != -1 and b < self.basis[leave]):
                    step, leave = lim, i
            if step is None:
                return UNBOUNDED
            self._tick()
            self._shift(q, sigma * step)
            if leave == -1:
                continue
            b = self.basis[leave]
            # Snap the leaving variable onto the bound it reached.
            g = -self.T[leave][q] * sigma
            self.val[b] = self.lb[b] if g < 0 else self.ub[b]
            self.pivot(leave, q)

    # -- dual simplex ------------------------------------------------------

    def dual(self) -> str:
        while True:
            r = None
            target = None
            for i, b in enumerate(self.basis):
                v = self.val[b]
                lo, hi = self.lb[b], self.ub[b]
                if lo is not None and v < lo:
                    cand = lo
                elif hi is not None and v > hi:
                    cand = hi
                else:
                    continue
                if r is None or b < self.basis[r]:
                    r, target = i, cand
            if r is None:
                return OPTIMAL
            b = self.basis[r]
            increase = self.val[b] < target
            row = self.T[r]
            q = None
            best = None
            for j, a in enumerate(row):
                if not a or j in self.pos:
                    continue
                if self.lb[j] is not None and self.lb[j] == self.ub[j]:
                    continue
                # x_b moves by -a * delta_j.
                if increase:
                    ok = (a < 0 and self._can_inc(j)) or (a > 0 and self._can_dec(j))
                else:
                    ok = (a > 0 and self._can_inc(j)) or (a < 0 and self._can_dec(j))
                if not ok:
                    continue
                ratio = abs(self.d[j] / a)
                if best is None or ratio < best or (ratio == best and j < q):
                    best, q = ratio, j
            if q is None:
                return INFEASIBLE
            self._tick()
            delta = (self.val[b] - target) / row[q]
            self._shift(q, delta)
            self.val[b] = target
            self.pivot(r, q)

    # -- modifications -----------------------------------------------------

    def add_row(self, row: Row):
        nv_total = len(self.d)
        new = [0] * (nv_total + 1)
        for j, a in row.coeffs.items():
            new[j] = mpq(a)
        new[nv_total] = 1
        for j, a in row.coeffs.items():
            i = self.pos.get(j)
            a = mpq(a)
            if i is not None and a:
                brow = self.T[i]
                for k, v in enumerate(brow):
                    if v:
                        new[k] -= a * v
        for r in self.T:
            r.append(0)
        self.T.append(new)
        self.cost.append(0)
        self.lb.append(_lower_slack(row.rel))
        self.ub.append(_upper_slack(row.rel))
        self.d.append(0)
        self.val.append(mpq(row.rhs) - sum(mpq(a) * self.val[j] for j, a in row.coeffs.items()))
        self.basis.append(nv_total)
        self.pos[nv_total] = len(self.T) - 1

    def set_bounds(self, j: int, lo, hi):
        self.lb[j], self.ub[j] = lo, hi
        if j in self.pos:
            return
        v = self.val[j]
        if lo is not None and v < lo:
            self._shift(j, lo - v)
        elif hi is not None and v > hi:
            self._shift(j, hi - v)
        elif lo is not None and self.d[j] > 0 and v != lo:
            self._shift(j, lo - v)
        elif hi is not None and self.d[j] < 0 and v != hi:
            self._shift(j, hi - v)

    def dual_feasible(self) -> bool:
        for j, dj in enumerate(self.d):
            if j in self.pos or not dj:
                continue
            if self.lb[j] is not None and self.lb[j] == self.ub[j]:
                continue
            if dj > 0 and self._can_dec(j):
                return False
            if dj < 0 and self._can_inc(j):
                return False
        return True


def _finish(lp: LinearProgram, t: _Tableau, status: str, pivots: int) -> BasicSolution:
    if status != OPTIMAL:
        return BasicSolution(status=status, lp=lp, pivots=pivots)
    nv = lp.num_vars
    values = tuple(_frac(v) for v in t.val[:nv])
    sign = 1 if lp.sense == "min" else -1
    duals = tuple(_frac(-sign * t.d[nv + i]) for i in range(len(lp.rows)))
    reduced = tuple(_frac(sign * t.d[j]) for j in range(nv))
    return BasicSolution(
        status=OPTIMAL,
        lp=lp,
        values=values,
        objective=lp.objective_value(values),
        basis=tuple(sorted(t.basis)),
        duals=duals,
        reduced_costs=reduced,
        pivots=pivots,
        _state=t,
    )


def _run(t: _Tableau, lp: LinearProgram) -> BasicSolution:
    if not t.dual_feasible():
        saved = t.cost
        t.cost = [0] * len(saved)
        t.recompute_d()
        status = t.dual()
        t.cost = saved
        t.recompute_d()
        if status != OPTIMAL:
            return _finish(lp, t, status, t.pivots)
        return _finish(lp, t, t.primal(), t.pivots)
    status = t.dual()
    if status != OPTIMAL:
        return _finish(lp, t, status, t.pivots)
    return _finish(lp, t, t.primal(), t.pivots)


def simplex_solve(lp: LinearProgram, rule: str = "bland") -> BasicSolution:
    """Solve ``lp`` exactly.

    ``rule`` is ``"bland"`` (smallest index, never cycles) or ``"dantzig"``
    (largest reduced cost, usually fewer pivots).  Infeasible and unbounded
    problems come back as statuses.
    """
    if rule not in ("bland", "dantzig"):
        raise ValueError(f"unknown pivot rule {rule!r}")
    t = _Tableau.build(lp, rule)
    t.cost = [0] * len(t.cost)
    t.recompute_d()
    status = t.dual()
    sign = 1 if lp.sense == "min" else -1
    t.cost = [mpq(sign * c) for c in lp.objective] + [0] * len(lp.rows)
    if status != OPTIMAL:
        return _finish(lp, t, status, t.pivots)
    t.recompute_d()
    return _finish(lp, t, t.primal(), t.pivots)


def add_row_and_resolve(sol: BasicSolution, row: Row) -> BasicSolution:
    """Append ``row`` to the LP behind ``sol`` and reoptimize from its basis."""
    return add_rows_and_resolve(sol, [row])


def add_rows_and_resolve(sol: BasicSolution, rows: Sequence[Row]) -> BasicSolution:
    if not sol.optimal:
        raise ValueError("can only warm start from an optimal solution")
    lp = sol.lp
    t = sol._state.copy()
    for row in rows:
        row = Row({j: Fraction(a) for j, a in row.coeffs.items() if a}, row.rel, Fraction(row.rhs))
        lp = lp.with_row(row)
        t.add_row(row)
    return _run(t, lp)


def change_bounds_and_resolve(sol: BasicSolution, changes: Mapping[int, tuple]) -> BasicSolution:
    """Replace the bounds of some variables (``{j: (lo, hi)}``) and reoptimize."""
    if not sol.optimal:
        raise ValueError("can only warm start from an optimal solution")
    lp = sol.lp
    t = sol._state.copy()
    for j, (lo, hi) in changes.items():
        lo = None if lo is None else Fraction(lo)
        hi = None if hi is None else Fraction(hi)
        lp = lp.with_bounds(j, lo, hi)
        t.set_bounds(j, _q(lo), _q(hi))
    return _run(t, lp)


def verify_optimality(sol: BasicSolution) -> bool:
    """Recheck an optimal solution from the original LP data alone.

    Primal feasibility, sign conditions of the row prices and reduced costs,
    and equality of primal and dual objectives are all tested exactly.
    """
    lp = sol.lp
    x = sol.values
    if not sol.optimal or not lp.is_feasible(x):
        return False
    sign = 1 if lp.sense == "min" else -1
    y = [sign * v for v in sol.duals]
    # Row price signs for a minimisation in slack form.
    for row, yi in zip(lp.rows, y):
        if row.rel == LE and yi > 0:
            return False
        if row.rel == GE and yi < 0:
            return False
        if yi and row.activity(x) != row.rhs:
            return False
    dual_obj = sum((yi * row.rhs for yi, row in zip(y, lp.rows)), Fraction(0))
    for j in range(lp.num_vars):
        dj = sign * lp.objective[j] - sum((yi * row.coeffs.get(j, 0) for yi, row in zip(y, lp.rows)), Fraction(0))
        if dj != sign * sol.reduced_costs[j]:
            return False
        lo, hi = lp.lower[j], lp.upper[j]
        if dj > 0:
            if lo is None or x[j] != lo:
                return False
            dual_obj += dj * lo
        elif dj < 0:
            if hi is None or x[j] != hi:
                return False
            dual_obj += dj * hi
    return dual_obj == sign * sol.objective


def tight_rank(lp: LinearProgram, x: Sequence) -> int:
    """Rank of the constraints (rows and bounds) that hold with equality at ``x``."""
    nv = lp.num_vars
    rows = []
    for row in lp.rows:
        if row.activity(x) == row.rhs:
            rows.append([Fraction(row.coeffs.get(j, 0)) for j in range(nv)])
    for j in range(nv):
        if x[j] == lp.lower[j] or x[j] == lp.upper[j]:
            e = [Fraction(0)] * nv
            e[j] = Fraction(1)
            rows.append(e)
    return matrix_rank(rows, nv)


def matrix_rank(rows: list, ncols: int) -> int:
    rows = [list(r) for r in rows]
    rank = 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank]
        for i in range(rank + 1, len(rows)):
            f = rows[i][col]
            if f:
                f = f / p[col]
                rows[i] = [a - f * b for a, b in zip(rows[i], p)]
        rank += 1
        if rank == len(rows):
            break
    return rank
