"""Exact two-phase simplex, membership checks, fibers and vertex enumeration.

All arithmetic is exact.  The tableau works on ``gmpy2.mpq`` internally for
speed; every value crossing the module boundary is a ``fractions.Fraction``.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple

from gmpy2 import mpq

from .consys import EQ, LE, ConstraintSystem, LinRow, Objective, sort_key
from .errors import EnumerationRefused, TspefError
from .instances import format_rational

log = logging.getLogger(__name__)

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"

DEFAULT_MAX_BASES = 2_000_000

_ZERO = mpq(0)


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def _col_name(col) -> str:
    if isinstance(col, tuple) and len(col) == 2 and col[0] in ("slack", "neg"):
        return f"{col[0]}[{col[1]}]"
    return str(col)


@dataclass
class LpSolution:
    status: str
    point: dict = field(default_factory=dict)
    objective_value: Fraction | None = None
    basis: tuple = ()
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def value(self, var) -> Fraction:
        return self.point.get(var, Fraction(0))

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "objective": None if self.objective_value is None
            else format_rational(self.objective_value),
            "point": {str(v): format_rational(c)
                      for v, c in sorted(self.point.items(), key=lambda kv: sort_key(kv[0]))
                      if c != 0},
            "basis": [_col_name(c) for c in self.basis],
            "pivots": self.pivots,
        }


class _StandardForm:
    """``A x = b, x >= 0`` with ``b >= 0``; one slack per inequality row.

    Free variables are split into a positive part (named by the variable) and
    a negative part named ``("neg", var)``.
    """

    def __init__(self, variables, rows, nonneg):
        self.columns = []
        self.index = {}
        for v in variables:
            self._add(v)
        for v in variables:
            if v not in nonneg:
                self._add(("neg", v))
        self.rows = []
        self.b = []
        self.slack_of_row = {}
        for k, row in enumerate(rows):
            coef = {}
            for v, c in row.coef:
                coef[self.index[v]] = mpq(c.numerator, c.denominator)
                if v not in nonneg:
                    coef[self.index[("neg", v)]] = -coef[self.index[v]]
            if row.rel == LE:
                s = self._add(("slack", k))
                coef[s] = mpq(1)
                self.slack_of_row[k] = s
            rhs = mpq(row.rhs.numerator, row.rhs.denominator)
            if rhs < 0:
                coef = {j: -c for j, c in coef.items()}
                rhs = -rhs
            self.rows.append(coef)
            self.b.append(rhs)
        self.n_structural = len(self.columns)

    def _add(self, name):
        self.index[name] = len(self.columns)
        self.columns.append(name)
        return self.index[name]

    def point_from(self, values: Mapping[int, object], variables) -> dict:
        point = {}
        for v in variables:
            val = values.get(self.index[v], _ZERO)
            neg = self.index.get(("neg", v))
            if neg is not None:
                val = val - values.get(neg, _ZERO)
            point[v] = _frac(val)
        return point


class _Tableau:
    """Sparse dictionary tableau.  ``obj`` holds reduced costs; objective = obj_val + sum obj[j] x_j."""

    def __init__(self, rows, rhs, basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.obj = {}
        self.obj_val = _ZERO
        self.pivots = 0

    def copy(self) -> "_Tableau":
        t = _Tableau([dict(r) for r in self.rows], list(self.rhs), list(self.basis))
        t.obj = dict(self.obj)
        t.obj_val = self.obj_val
        t.pivots = self.pivots
        return t

    def set_objective(self, cost: Mapping[int, object]):
        obj = {j: c for j, c in cost.items() if c != 0}
        val = _ZERO
        for i, bj in enumerate(self.basis):
            cb = obj.get(bj)
            if cb is None:
                continue
            val += cb * self.rhs[i]
            for k, a in self.rows[i].items():
                nv = obj.get(k, _ZERO) - cb * a
                if nv:
                    obj[k] = nv
                else:
                    obj.pop(k, None)
        self.obj = obj
        self.obj_val = val

    def pivot(self, r: int, c: int):
        row = self.rows[r]
        p = row[c]
        if p != 1:
            inv = 1 / p
            row = {k: v * inv for k, v in row.items()}
            self.rows[r] = row
            self.rhs[r] = self.rhs[r] * inv
        b_r = self.rhs[r]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other.get(c)
            if f is None:
                continue
            for k, v in row.items():
                nv = other.get(k, _ZERO) - f * v
                if nv:
                    other[k] = nv
                else:
                    del other[k]
            if b_r:
                self.rhs[i] = self.rhs[i] - f * b_r
        f = self.obj.get(c)
        if f is not None:
            obj = self.obj
            for k, v in row.items():
                nv = obj.get(k, _ZERO) - f * v
                if nv:
                    obj[k] = nv
                else:
                    del obj[k]
            self.obj_val += f * b_r
        self.basis[r] = c
        self.pivots += 1

    def entering(self, rule: str, allowed=None):
        candidates = [(j, d) for j, d in self.obj.items()
                      if d < 0 and (allowed is None or j < allowed)]
        if not candidates:
            return None
        if rule == "bland":
            return min(candidates)[0]
        return min(candidates, key=lambda jd: (jd[1], jd[0]))[0]

    def leaving(self, c: int):
        best = None
        for i, row in enumerate(self.rows):
            a = row.get(c)
            if a is None or a <= 0:
                continue
            key = (self.rhs[i] / a, self.basis[i])
            if best is None or key < best[0]:
                best = (key, i)
        return None if best is None else best[1]

    def run(self, rule: str = "bland", allowed=None, stall_limit: int = 50) -> str:
        """Pivot to optimality.  ``dantzig`` falls back to Bland for good after a degenerate stall."""
        stalled = 0
        while True:
            c = self.entering(rule, allowed)
            if c is None:
                return OPTIMAL
            r = self.leaving(c)
            if r is None:
                return UNBOUNDED
            degenerate = self.rhs[r] == 0
            self.pivot(r, c)
            if rule != "bland":
                stalled = stalled + 1 if degenerate else 0
                if stalled >= stall_limit:
                    rule = "bland"

    def values(self) -> dict:
        return {bj: self.rhs[i] for i, bj in enumerate(self.basis) if self.rhs[i]}

    def to_json(self, columns) -> dict:
        return {
            "basis": [_col_name(columns[j]) if j < len(columns) else f"art[{j}]"
                      for j in self.basis],
            "rhs": [format_rational(_frac(v)) for v in self.rhs],
            "rows": [{_col_name(columns[k]) if k < len(columns) else f"art[{k}]":
                      format_rational(_frac(v)) for k, v in sorted(row.items())}
                     for row in self.rows],
            "reduced_costs": {_col_name(columns[k]): format_rational(_frac(v))
                              for k, v in sorted(self.obj.items()) if k < len(columns)},
        }


def _phase_one(sf: _StandardForm, rule: str):
    """Feasible basis for ``sf`` with artificial columns removed, or None if infeasible."""
    n = sf.n_structural
    rows = [dict(r) for r in sf.rows]
    basis = []
    art = n
    for i, row in enumerate(rows):
        slack = None
        for j, a in row.items():
            if a == 1 and isinstance(sf.columns[j], tuple) and sf.columns[j][0] == "slack":
                slack = j
                break
        if slack is not None:
            basis.append(slack)
        else:
            row[art] = mpq(1)
            basis.append(art)
            art += 1
    tab = _Tableau(rows, list(sf.b), basis)
    pivots = 0
    if art > n:
        tab.set_objective({j: mpq(1) for j in range(n, art)})
        tab.run(rule)
        if tab.obj_val != 0:
            return None
        # drive zero-level artificials out; rows where that is impossible are redundant
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] >= n:
                cols = [k for k in tab.rows[i] if k < n]
                if cols:
                    tab.pivot(i, min(cols))
                else:
                    del tab.rows[i], tab.rhs[i], tab.basis[i]
                    continue
            i += 1
        for row in tab.rows:
            for k in [k for k in row if k >= n]:
                del row[k]
        pivots = tab.pivots
    tab.obj = {}
    tab.obj_val = _ZERO
    tab.pivots = pivots
    return tab


def solve(sys: ConstraintSystem, obj: Objective | None = None, *, rule: str = "bland",
          dump: str | None = None) -> LpSolution:
    """Minimize ``obj`` over ``sys`` exactly.  Infeasible/unbounded are statuses, not errors."""
    obj = obj or Objective()
    for v in obj.coef:
        if v not in sys.nonneg and v not in set(sys.variables):
            raise TspefError(f"objective uses undeclared variable {v}")
    sf = _StandardForm(sys.variables, sys.rows, sys.nonneg)
    tab = _phase_one(sf, rule)
    if tab is None:
        return LpSolution(INFEASIBLE)
    cost = {}
    for v, c in obj.coef.items():
        q = mpq(c.numerator, c.denominator)
        cost[sf.index[v]] = q
        neg = sf.index.get(("neg", v))
        if neg is not None:
            cost[neg] = -q
    tab.set_objective(cost)
    status = tab.run(rule)
    if dump:
        with open(dump, "w") as fh:
            json.dump(tab.to_json(sf.columns), fh, indent=1)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, pivots=tab.pivots)
    point = sf.point_from(tab.values(), sys.variables)
    value = obj.value(point)
    if value != _frac(tab.obj_val):
        raise TspefError("internal error: tableau objective disagrees with the point")
    bad = check_membership(sys, point)
    if bad:
        raise TspefError(f"internal error: optimal point violates {bad[0]}")
    log.debug("solved %s: %d pivots, objective %s", sys.name, tab.pivots, value)
    return LpSolution(OPTIMAL, point, value, tuple(sf.columns[j] for j in tab.basis), tab.pivots)


def feasible_point(sys: ConstraintSystem) -> LpSolution:
    return solve(sys, Objective())


class Violation(NamedTuple):
    label: str
    lhs: Fraction
    rel: str
    rhs: Fraction

    def __str__(self):
        op = "=" if self.rel == EQ else "<="
        return f"{self.label}: {self.lhs} {op} {self.rhs} fails"


def check_membership(sys: ConstraintSystem, point: Mapping) -> list:
    """Every violated row (and nonnegativity bound) at ``point``; missing variables read as 0."""
    declared = set(sys.variables)
    unknown = [v for v in point if v not in declared]
    if unknown:
        raise TspefError(f"point has variables not in the system: {', '.join(map(str, unknown[:5]))}")
    out = []
    for k, row in enumerate(sys.rows):
        lhs = row.lhs(point)
        if not (lhs == row.rhs if row.rel == EQ else lhs <= row.rhs):
            out.append(Violation(row.label or f"row[{k}]", lhs, row.rel, row.rhs))
    for v in sys.variables:
        if v in sys.nonneg and point.get(v, 0) < 0:
            out.append(Violation(f"nonneg[{v}]", -Fraction(point[v]), LE, Fraction(0)))
    return out


def substitute(sys: ConstraintSystem, fixed: Mapping) -> tuple[ConstraintSystem, list]:
    """Fix some variables to values; returns the reduced system and the rows left unsatisfiable."""
    declared = set(sys.variables)
    for v in fixed:
        if v not in declared:
            raise TspefError(f"cannot fix unknown variable {v}")
    rows = []
    broken = []
    for row in sys.rows:
        rest = {}
        rhs = row.rhs
        for v, c in row.coef:
            if v in fixed:
                rhs -= c * Fraction(fixed[v])
            else:
                rest[v] = c
        if not rest:
            ok = rhs == 0 if row.rel == EQ else rhs >= 0
            if not ok:
                broken.append(row)
            continue
        rows.append(LinRow.make(rest, row.rel, rhs, row.label))
    free = [v for v in sys.variables if v not in fixed]
    for v, val in fixed.items():
        if v in sys.nonneg and val < 0:
            broken.append(LinRow.make({}, LE, Fraction(val), f"nonneg[{v}]"))
    reduced = ConstraintSystem(free, rows, sys.nonneg - set(fixed), sys.name + "|fixed")
    return reduced, broken


def fiber_feasible(sys: ConstraintSystem, fixed: Mapping) -> LpSolution:
    """Solve the feasibility problem over the variables not in ``fixed``.

    ``fixed`` must cover whole variable families (e.g. all of ``W``, or all of
    ``W`` and ``X``).  An optimal status means the fiber is nonempty; the
    returned point is the full point with the fixed values merged in.
    """
    fams = {v.family for v in fixed}
    for fam in fams:
        missing = [v for v in sys.family(fam) if v not in fixed]
        if missing:
            raise TspefError(f"fixed values must cover the whole {fam} family; missing {missing[0]}")
    reduced, broken = substitute(sys, fixed)
    if broken:
        log.debug("fiber empty: %s", broken[0])
        return LpSolution(INFEASIBLE)
    sol = solve(reduced)
    if sol.optimal:
        full = dict(sol.point)
        full.update({v: Fraction(c) for v, c in fixed.items()})
        sol.point = full
    return sol


@dataclass
class VertexSet:
    vertices: list
    integral: list
    bases_examined: int = 0

    def __len__(self):
        return len(self.vertices)

    @property
    def fractional(self) -> list:
        return [v for v, ok in zip(self.vertices, self.integral) if not ok]

    def to_json(self) -> dict:
        return {
            "count": len(self.vertices),
            "fractional": sum(1 for ok in self.integral if not ok),
            "bases_examined": self.bases_examined,
            "vertices": [{"integral": ok,
                          "point": {str(v): format_rational(c)
                                    for v, c in sorted(p.items(), key=lambda kv: sort_key(kv[0]))
                                    if c != 0}}
                         for p, ok in zip(self.vertices, self.integral)],
        }


def _independent_rows(rows, b, ncols):
    """Drop linearly dependent equality rows; None if the system is inconsistent."""
    kept = []
    basis_rows = []  # reduced rows with their pivot column, for incremental elimination
    for i, (row, rhs) in enumerate(zip(rows, b)):
        vec = dict(row)
        val = rhs
        for piv, prow, prhs in basis_rows:
            f = vec.get(piv)
            if f:
                for k, v in prow.items():
                    nv = vec.get(k, _ZERO) - f * v
                    if nv:
                        vec[k] = nv
                    else:
                        vec.pop(k, None)
                val -= f * prhs
        if not vec:
            if val != 0:
                return None
            continue
        piv = min(vec)
        p = vec[piv]
        vec = {k: v / p for k, v in vec.items()}
        basis_rows.append((piv, vec, val / p))
        kept.append(i)
    return kept


def _solve_square(cols, rows, b):
    """Solve ``B x = b`` for the columns ``cols``; None if singular."""
    r = len(cols)
    mat = [[row.get(c, _ZERO) for c in cols] + [b[i]] for i, row in enumerate(rows)]
    for k in range(r):
        piv = next((i for i in range(k, r) if mat[i][k] != 0), None)
        if piv is None:
            return None
        mat[k], mat[piv] = mat[piv], mat[k]
        inv = 1 / mat[k][k]
        pk = [v * inv for v in mat[k]]
        mat[k] = pk
        for i in range(r):
            if i != k and mat[i][k] != 0:
                f = mat[i][k]
                mat[i] = [a - f * bk for a, bk in zip(mat[i], pk)]
    return [mat[i][r] for i in range(r)]


def _collect(sys, sf, found: dict, values: dict):
    point = sf.point_from(values, sys.variables)
    key = tuple(point[v] for v in sys.variables)
    if key not in found:
        found[key] = point


def _finish(found: dict, examined: int) -> VertexSet:
    pts = list(found.values())
    return VertexSet(pts, [all(c.denominator == 1 for c in p.values()) for p in pts], examined)


def enumerate_vertices(sys: ConstraintSystem, guard: int = DEFAULT_MAX_BASES,
                       method: str = "bases") -> VertexSet:
    """All vertices of ``sys`` (all variables must be nonnegative).

    ``method="bases"`` tries every column subset of basis size and keeps the
    feasible nonsingular ones; ``guard`` bounds the number of subsets.
    ``method="lex"`` walks lexicographically feasible bases by pivoting from
    one feasible basis; ``guard`` bounds the number of bases visited.  Both
    return the same vertex set.
    """
    if set(sys.variables) != set(sys.nonneg):
        raise TspefError("vertex enumeration needs every variable declared nonnegative")
    sf = _StandardForm(sys.variables, sys.rows, sys.nonneg)
    if method == "bases":
        return _enumerate_by_bases(sys, sf, guard)
    if method == "lex":
        return _enumerate_by_lex_pivots(sys, sf, guard)
    raise ValueError(f"unknown method {method!r}")


def _enumerate_by_bases(sys, sf, guard):
    kept = _independent_rows(sf.rows, sf.b, sf.n_structural)
    if kept is None:
        return VertexSet([], [], 0)
    rows = [sf.rows[i] for i in kept]
    b = [sf.b[i] for i in kept]
    ncols, r = sf.n_structural, len(rows)
    total = math.comb(ncols, r)
    if total > guard:
        raise EnumerationRefused(
            f"{total} basis candidates exceed the guard of {guard}; use method='lex' "
            "or targeted LP probes (solve with chosen objectives) instead"
        )
    found: dict = {}
    if r == 0:
        _collect(sys, sf, found, {})
        return _finish(found, 1)
    for cols in itertools.combinations(range(ncols), r):
        x = _solve_square(cols, rows, b)
        if x is None or any(v < 0 for v in x):
            continue
        _collect(sys, sf, found, dict(zip(cols, x)))
    return _finish(found, total)


def _lex_key(tab, i, ref, a):
    return [tab.rhs[i] / a] + [tab.rows[i].get(c, _ZERO) / a for c in ref]


def _enumerate_by_lex_pivots(sys, sf, guard):
    tab = _phase_one(sf, "bland")
    if tab is None:
        return VertexSet([], [], 0)
    # perturbing b by the starting basis columns makes every lex-feasible basis nondegenerate
    ref = list(tab.basis)
    ncols = sf.n_structural
    found: dict = {}
    seen = {frozenset(tab.basis)}
    queue = deque([tab])
    while queue:
        cur = queue.popleft()
        _collect(sys, sf, found, cur.values())
        basic = set(cur.basis)
        for c in range(ncols):
            if c in basic:
                continue
            best = None
            for i, row in enumerate(cur.rows):
                a = row.get(c)
                if a is None or a <= 0:
                    continue
                key = _lex_key(cur, i, ref, a)
                if best is None or key < best[0]:
                    best = (key, i)
            if best is None:
                continue
            r = best[1]
            nb = frozenset(basic - {cur.basis[r]} | {c})
            if nb in seen:
                continue
            seen.add(nb)
            if len(seen) > guard:
                raise EnumerationRefused(
                    f"more than {guard} lexicographic bases; raise the guard or probe with LPs"
                )
            nxt = cur.copy()
            nxt.pivot(r, c)
            queue.append(nxt)
    return _finish(found, len(seen))
