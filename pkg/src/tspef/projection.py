"""Lifting maps, extended-formulation checks, Fourier-Motzkin elimination and
exact convex-hull membership (including membership in the TSP polytope)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from .consys import (
    EQ,
    LE,
    ConstraintSystem,
    LinRow,
    Objective,
    VarId,
    W,
    Y,
    build_lap_polytope,
    sort_key,
)
from .errors import EnumerationRefused, NotAVertexError, TspefError
from .instances import (
    MAX_ENUMERATION_M,
    AssignmentVector,
    LegVector,
    Tour,
    TripletVector,
    all_tours,
    format_rational,
    tour_to_assignment,
    tour_to_legs,
    triplet_keys,
)
from .lp import OPTIMAL, UNBOUNDED, check_membership, solve

DEFAULT_MAX_FM_ROWS = 100_000
MAX_MEMBERSHIP_M = 7


def as_point(*vectors) -> dict:
    """Merge assignment/leg/triplet vectors into one ``{VarId: value}`` point (zeros omitted)."""
    point = {}
    for vec in vectors:
        if isinstance(vec, AssignmentVector):
            point.update({W(*k): v for k, v in vec.nonzero().items()})
        elif isinstance(vec, LegVector):
            point.update({Y(*k): v for k, v in vec.nonzero().items()})
        elif isinstance(vec, TripletVector):
            point.update({VarId("X", k): v for k, v in vec.nonzero().items()})
        else:
            point.update(vec)
    return point


def w_part(point: Mapping, m: int) -> AssignmentVector:
    return AssignmentVector(m, {v.index: c for v, c in point.items() if v.family == "W"})


def y_part(point: Mapping, n: int) -> LegVector:
    return LegVector(n, {v.index: c for v, c in point.items() if v.family == "Y"})


def _require_vertex(w: AssignmentVector):
    if not w.is_permutation():
        raise NotAVertexError("lifting is only defined at permutation matrices")


def lift_w_to_y(w: AssignmentVector) -> LegVector:
    """Leg vector of the tour encoded by a permutation matrix."""
    _require_vertex(w)
    m = w.m
    legs = {}
    for i in range(1, m + 1):
        if w[i, 1] == 1:
            legs[0, i] = 1
        if w[i, m] == 1:
            legs[i, 0] = 1
    for r in range(1, m):
        for i in range(1, m + 1):
            for j in range(1, m + 1):
                if i != j and w[i, r] == 1 and w[j, r + 1] == 1:
                    legs[i, j] = 1
    return LegVector(m + 1, legs)


def lift_w_to_x(w: AssignmentVector) -> TripletVector:
    """Triplet vector ``x[a|b|c] = w[a] * w[b] * w[c]`` of a permutation matrix."""
    _require_vertex(w)
    if w.m < 3:
        return TripletVector(w.m, {})
    return TripletVector(w.m, {key: 1 for key in triplet_keys(w.m)
                               if all(w[node] == 1 for node in key)})


@dataclass
class LiftReport:
    source: Tour
    lifted: dict
    feasible: bool
    violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "source": str(self.source),
            "lifted": {str(v): format_rational(c)
                       for v, c in sorted(self.lifted.items(), key=lambda kv: sort_key(kv[0]))},
            "feasible": self.feasible,
            "violations": [str(v) for v in self.violations],
        }


@dataclass
class EfVerdict:
    is_ef: bool
    rows_embedded: bool
    missing_rows: list
    lifts: list

    @property
    def lifts_feasible(self) -> int:
        return sum(1 for r in self.lifts if r.feasible)

    def first_failure(self):
        return next((r for r in self.lifts if not r.feasible), None)

    def to_json(self) -> dict:
        bad = self.first_failure()
        return {
            "is_ef": self.is_ef,
            "rows_embedded": self.rows_embedded,
            "missing_rows": [str(r) for r in self.missing_rows],
            "lifts": len(self.lifts),
            "lifts_feasible": self.lifts_feasible,
            "first_failure": bad.to_json() if bad else None,
        }


def verify_ef_of_lap(sys: ConstraintSystem,
                     lift: Callable[[AssignmentVector], object],
                     m: int) -> EfVerdict:
    """Check that ``sys`` projects onto the assignment polytope of size ``m``.

    Inclusion of the projection in the assignment polytope holds when every
    assignment row (and the nonnegativity of ``w``) is part of ``sys``.  The
    reverse inclusion holds when every permutation matrix lifts to a feasible
    point, because the assignment polytope is their convex hull.
    """
    if m > MAX_ENUMERATION_M:
        raise EnumerationRefused(f"m={m} is too large to lift all {m}! permutations")
    lap = build_lap_polytope(m)
    missing = [r for r in lap.rows if not any(r.same_constraint(s) for s in sys.rows)]
    missing += [LinRow.make({v: -1}, LE, 0, f"nonneg[{v}]")
                for v in lap.variables if v not in sys.nonneg]
    reports = []
    for t in all_tours(m):
        w = tour_to_assignment(t)
        point = as_point(w, lift(w))
        bad = check_membership(sys, point)
        reports.append(LiftReport(t, point, not bad, bad))
    embedded = not missing
    return EfVerdict(embedded and all(r.feasible for r in reports), embedded, missing, reports)


def _normalized(coef: dict, rel: str, rhs: Fraction):
    """Scale so the first coefficient has magnitude 1 (and is positive for equalities)."""
    if not coef:
        return coef, rhs
    first = coef[min(coef, key=sort_key)]
    s = abs(first) if rel == LE else first
    return {v: c / s for v, c in coef.items()}, rhs / s


def fourier_motzkin(sys: ConstraintSystem, eliminate, max_rows: int = DEFAULT_MAX_FM_ROWS,
                    lp_redundancy: bool = False) -> ConstraintSystem:
    """Project ``sys`` onto the variables not eliminated.

    ``eliminate`` is a family name (``"W"``, ``"Y"``, ``"X"``) or an iterable
    of variables.  Equality rows are used for substitution when they contain
    the variable; otherwise inequalities are combined pairwise.  Duplicate rows
    and rows of the form ``0 <= c`` with ``c >= 0`` are dropped; with
    ``lp_redundancy`` every row implied by the others is dropped as well.
    """
    if isinstance(eliminate, str):
        targets = [v for v in sys.variables if v.family == eliminate]
    else:
        targets = list(eliminate)
    gone = set(targets)
    kept_vars = [v for v in sys.variables if v not in gone]
    kept_nonneg = sys.nonneg - gone

    rows = [(dict(r.coef), r.rel, r.rhs, r.label) for r in sys.rows]
    rows += [({v: Fraction(-1)}, LE, Fraction(0), f"nonneg[{v}]")
             for v in targets if v in sys.nonneg]

    for v in targets:
        with_v = [r for r in rows if v in r[0]]
        without = [r for r in rows if v not in r[0]]
        eqs = [r for r in with_v if r[1] == EQ]
        if eqs:
            piv = min(eqs, key=lambda r: len(r[0]))
            a = piv[0][v]
            new = []
            for r in with_v:
                if r is piv:
                    continue
                f = r[0][v] / a
                coef = dict(r[0])
                for k, c in piv[0].items():
                    coef[k] = coef.get(k, 0) - f * c
                new.append((coef, r[1], r[2] - f * piv[2], r[3]))
        else:
            pos = [r for r in with_v if r[0][v] > 0]
            neg = [r for r in with_v if r[0][v] < 0]
            if len(without) + len(pos) * len(neg) > max_rows:
                raise EnumerationRefused(
                    f"eliminating {v} would produce {len(without) + len(pos) * len(neg)} rows "
                    f"(limit {max_rows})"
                )
            new = []
            for p, q in itertools.product(pos, neg):
                sp, sq = -q[0][v], p[0][v]
                coef = {}
                for k, c in p[0].items():
                    coef[k] = coef.get(k, 0) + sp * c
                for k, c in q[0].items():
                    coef[k] = coef.get(k, 0) + sq * c
                new.append((coef, LE, sp * p[2] + sq * q[2], f"{p[3]}+{q[3]}"))
        rows = _clean(without + new, kept_nonneg)
        if len(rows) > max_rows:
            raise EnumerationRefused(f"{len(rows)} rows after eliminating {v} (limit {max_rows})")

    out = [LinRow.make(coef, rel, rhs, label) for coef, rel, rhs, label in rows]
    result = ConstraintSystem(kept_vars, out, kept_nonneg, f"proj({sys.name})")
    if lp_redundancy:
        result = remove_redundant_rows(result)
    return result


def _clean(rows, kept_nonneg):
    seen = set()
    out = []
    for coef, rel, rhs, label in rows:
        coef = {k: c for k, c in coef.items() if c != 0}
        if not coef:
            if (rel == EQ and rhs == 0) or (rel == LE and rhs >= 0):
                continue
            key = ("empty", rel, rhs)
        else:
            if rel == LE and rhs == 0 and len(coef) == 1:
                (var, c), = coef.items()
                if c < 0 and var in kept_nonneg:
                    continue
            coef, rhs = _normalized(coef, rel, rhs)
            key = (tuple(sorted(coef.items(), key=lambda kv: sort_key(kv[0]))), rel, rhs)
        if key in seen:
            continue
        seen.add(key)
        out.append((coef, rel, rhs, label))
    return out


def remove_redundant_rows(sys: ConstraintSystem) -> ConstraintSystem:
    """Drop each inequality implied by the remaining rows (one LP per row)."""
    rows = list(sys.rows)
    k = 0
    while k < len(rows):
        row = rows[k]
        if row.rel == LE and row.coef:
            rest = sys.replace_rows(rows[:k] + rows[k + 1:])
            sol = solve(rest, Objective.maximize(row.coefficients))
            if sol.status == OPTIMAL and -sol.objective_value <= row.rhs:
                del rows[k]
                continue
        k += 1
    return sys.replace_rows(rows)


@dataclass
class Containment:
    holds: bool
    failures: list

    def __bool__(self):
        return self.holds


def contains(outer: ConstraintSystem, inner: ConstraintSystem) -> Containment:
    """Whether the projection of ``inner`` onto ``outer``'s variables lies in ``outer``.

    Each row of ``outer`` is maximized (equalities also minimized) over
    ``inner``; an empty ``inner`` is contained in anything.
    """
    inner_vars = set(inner.variables)
    missing = [v for v in outer.variables if v not in inner_vars]
    if missing:
        raise TspefError(f"inner system lacks variables {missing[:3]}")
    if solve(inner).status != OPTIMAL:
        return Containment(True, [])
    failures = []
    probes = [(r, r.coefficients, "max") for r in outer.rows]
    probes += [(r, {v: -c for v, c in r.coef}, "min") for r in outer.rows if r.rel == EQ]
    probes += [(LinRow.make({v: -1}, LE, 0, f"nonneg[{v}]"), {v: Fraction(-1)}, "max")
               for v in outer.variables if v in outer.nonneg]
    for row, coef, sense in probes:
        sol = solve(inner, Objective.maximize(coef))
        if sol.status == UNBOUNDED:
            failures.append((row, sense, None))
            continue
        best = -sol.objective_value
        bound = row.rhs if sense == "max" else -row.rhs
        if best > bound:
            failures.append((row, sense, best))
    return Containment(not failures, failures)


@dataclass
class HullMembership:
    member: bool
    weights: dict

    def __bool__(self):
        return self.member


def convex_hull_member(target: Mapping, points: Mapping) -> HullMembership:
    """Exact test of whether ``target`` is a convex combination of ``points``.

    ``points`` maps a label to a point (``{coordinate: value}``).  On success the
    returned weights form a basic solution, so at most as many labels carry
    positive weight as there are affinely independent coordinate equations.
    """
    labels = list(points)
    lam = {lab: ("lambda", k) for k, lab in enumerate(labels)}
    coords = set(target)
    for p in points.values():
        coords.update(p)
    coords = sorted(coords, key=repr)
    rows = [LinRow.make({lam[lab]: 1 for lab in labels}, EQ, 1, "weights_sum")]
    for c in coords:
        coef = {lam[lab]: points[lab].get(c, 0) for lab in labels}
        rows.append(LinRow.make(coef, EQ, Fraction(target.get(c, 0)), f"coord[{c}]"))
    variables = list(lam.values())
    sys = ConstraintSystem(variables, rows, variables, "hull")
    sol = solve(sys)
    if sol.status != OPTIMAL:
        return HullMembership(False, {})
    weights = {lab: sol.point[lam[lab]] for lab in labels if sol.point[lam[lab]] != 0}
    return HullMembership(True, weights)


def tsp_polytope_member(y: LegVector, n: int | None = None) -> HullMembership:
    """Whether a leg vector lies in the convex hull of all tour incidence vectors."""
    n = y.n if n is None else n
    m = n - 1
    if m > MAX_MEMBERSHIP_M:
        raise EnumerationRefused(f"m={m} exceeds the TSP-polytope membership limit {MAX_MEMBERSHIP_M}")
    tours = {t: tour_to_legs(t, n).nonzero() for t in all_tours(m)}
    return convex_hull_member(y.nonzero(), tours)


def birkhoff_decomposition(w: AssignmentVector) -> HullMembership:
    """Exact convex combination of permutation matrices equal to ``w`` (labels are tours)."""
    perms = {t: tour_to_assignment(t).nonzero() for t in all_tours(w.m)}
    return convex_hull_member(w.nonzero(), perms)

