"""Verification suites: each runs exact experiments and returns a TheoremReport."""

from __future__ import annotations

import random
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction

from .consys import (
    Objective,
    W,
    Y,
    build_lap_polytope,
    build_q0_triplet,
    build_q1bar,
    build_q2bar,
    objective_on_w,
    triplet_cost_vector,
)
from .errors import TspefError
from .instances import (
    Tour,
    TspInstance,
    all_tours,
    assignment_to_tour,
    brute_force_lap,
    brute_force_tsp,
    format_rational,
    random_cost_matrix,
    tour_cost,
    tour_to_assignment,
)
from .lp import (
    check_membership,
    enumerate_vertices,
    fiber_feasible,
    solve,
)
from .projection import (
    as_point,
    birkhoff_decomposition,
    lift_w_to_x,
    lift_w_to_y,
    tsp_polytope_member,
    verify_ef_of_lap,
    w_part,
    y_part,
)


@dataclass
class TheoremReport:
    theorem: str
    params: dict
    trials: int = 0
    passed: int = 0
    counterexample: dict | None = None
    ms: int = 0
    details: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.counterexample is None and self.passed == self.trials

    def record(self, ok: bool, counterexample: dict | None = None):
        self.trials += 1
        if ok:
            self.passed += 1
        elif self.counterexample is None:
            self.counterexample = counterexample or {}

    def to_json(self) -> dict:
        return {
            "theorem": self.theorem,
            "params": self.params,
            "trials": self.trials,
            "passed": self.passed,
            "counterexample": self.counterexample,
            "ms": self.ms,
            "details": self.details,
        }

    def summary(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        return f"{verdict} {self.theorem}: {self.passed}/{self.trials} ({self.ms} ms)"


@contextmanager
def _timed(report: TheoremReport):
    start = time.perf_counter()
    try:
        yield report
    finally:
        report.ms = int((time.perf_counter() - start) * 1000)


def _fmt_matrix(rows) -> list:
    return [[format_rational(Fraction(v)) for v in row] for row in rows]


def _fmt_point(point) -> dict:
    return {str(v): format_rational(c) for v, c in point.items() if c != 0}


def _size(inst_or_m, offset: int) -> int:
    if isinstance(inst_or_m, TspInstance):
        return inst_or_m.m if offset == 0 else inst_or_m.n
    return inst_or_m


def _permutation_costs(c, m):
    """Cost of every permutation matrix under ``c`` (keyed by tour)."""
    return {t: sum((Fraction(c[lvl - 1][st - 1]) for st, lvl in enumerate(t.order, 1)),
                   Fraction(0))
            for t in all_tours(m)}


def decomposition_bound(m: int) -> int:
    """Dimension of the assignment polytope plus one: the Caratheodory bound for its points."""
    return m * m - 2 * m + 2


def verify_lemma1(ms=(3, 4, 5)) -> TheoremReport:
    """Every permutation lifts into the leg-extended system, whose assignment rows are embedded."""
    report = TheoremReport("lemma1", {"m": list(ms)})
    with _timed(report):
        for m in ms:
            verdict = verify_ef_of_lap(build_q1bar(m + 1), lift_w_to_y, m)
            for lr in verdict.lifts:
                ok = lr.feasible and verdict.rows_embedded
                report.record(ok, {"m": m, "tour": str(lr.source),
                                   "violations": [str(v) for v in lr.violations],
                                   "missing_rows": [str(r) for r in verdict.missing_rows]})
            report.details.append({"m": m, "lifts": len(verdict.lifts),
                                   "feasible": verdict.lifts_feasible, "is_ef": verdict.is_ef})
    return report


def lemma2_point() -> dict:
    """The fractional point at n=5 whose leg part has ``y[4,3] = 2``."""
    q, tq, h = Fraction(1, 4), Fraction(3, 4), Fraction(1, 2)
    w = {W(1, 1): q, W(2, 2): q, W(4, 3): q, W(3, 4): q,
         W(4, 1): tq, W(3, 2): tq, W(1, 3): tq, W(2, 4): tq}
    y = {Y(0, 1): q, Y(3, 0): q, Y(0, 4): tq, Y(2, 0): tq,
         Y(3, 1): h, Y(1, 2): h, Y(4, 3): Fraction(2)}
    return {**w, **y}


def verify_lemma2_counterexample() -> TheoremReport:
    report = TheoremReport("lemma2", {"n": 5})
    with _timed(report):
        point = lemma2_point()
        q1 = build_q1bar(5)
        violations = check_membership(q1, point)
        report.record(not violations, {"check": "feasible in Q1bar",
                                       "violations": [str(v) for v in violations]})

        ybar = y_part(point, 5)
        hull = tsp_polytope_member(ybar)
        report.record(not hull.member, {"check": "outside the TSP polytope",
                                        "weights": {str(t): format_rational(c)
                                                    for t, c in hull.weights.items()}})

        over = {f"y[{i},{j}]": format_rational(v) for (i, j), v in ybar.nonzero().items() if v > 1}
        report.record(ybar[4, 3] == 2 and bool(over), {"check": "box", "over_one": over})

        w1 = tour_to_assignment(Tour((1, 2, 4, 3)))
        w2 = tour_to_assignment(Tour((4, 3, 1, 2)))
        wbar = w_part(point, 4)
        residual = wbar - (Fraction(1, 4) * w1 + Fraction(3, 4) * w2)
        report.record(not residual.nonzero(), {"check": "decomposition",
                                               "residual": {str(k): format_rational(v)
                                                            for k, v in residual.nonzero().items()}})

        tours = [str(assignment_to_tour(w1)), str(assignment_to_tour(w2))]
        report.record(tours == ["0->1->2->4->3->0", "0->4->3->1->2->0"],
                      {"check": "tours", "tours": tours})
        report.details.append({"point": _fmt_point(point), "tours": tours,
                               "weights": ["1/4", "3/4"], "y_over_one": over})
    return report


def verify_equivalence_lap_lp1(inst, trials: int = 50, seed: int = 0,
                               costs=None) -> TheoremReport:
    """Assignment problem versus its leg-extended LP on random ``m x m`` costs.

    ``inst`` is a TspInstance or a size ``m``.  With ``costs`` given, those
    matrices are used instead of ``trials`` seeded random ones.
    """
    m = _size(inst, 0)
    if m > 5:
        raise TspefError(f"equivalence suite limited to m <= 5, got m={m}")
    if costs is None:
        rng = random.Random(seed)
        costs = [random_cost_matrix(m, rng) for _ in range(trials)]
    report = TheoremReport("equiv-lap-lp1", {"m": m, "trials": len(costs), "seed": seed})
    lap_sys = build_lap_polytope(m)
    q1 = build_q1bar(m + 1)
    bound = decomposition_bound(m)
    with _timed(report):
        for k, c in enumerate(costs):
            obj = objective_on_w(c)
            w_oracle, v_oracle = brute_force_lap(c)
            lap = solve(lap_sys, obj)
            lp1 = solve(q1, obj)
            problems = []
            if not (lap.optimal and lp1.optimal):
                problems.append(f"status lap={lap.status} lp1={lp1.status}")
            else:
                if not (lap.objective_value == lp1.objective_value == v_oracle):
                    problems.append(f"optima differ: oracle={v_oracle} lap={lap.objective_value} "
                                    f"lp1={lp1.objective_value}")
                w_star = w_part(lp1.point, m)
                if not w_star.doubly_stochastic():
                    problems.append("LP1 w-part is not doubly stochastic")
                if objective_on_w(c).value(as_point(w_star)) != v_oracle:
                    problems.append("LP1 w-part does not attain the LAP optimum")
                fiber = fiber_feasible(q1, {v: w_oracle[v.index] for v in q1.family("W")})
                if not fiber.optimal:
                    problems.append("LAP optimizer has an empty leg fiber")
                elif obj.value(fiber.point) != v_oracle:
                    problems.append("fixing w changed the objective")
                per_perm = _permutation_costs(c, m)
                optimal_perms = [t for t, v in per_perm.items() if v == v_oracle]
                if len(optimal_perms) == 1 and w_star != w_oracle:
                    problems.append("unique LAP optimum not returned by LP1")
                if not w_star.is_integral():
                    dec = birkhoff_decomposition(w_star)
                    if not dec.member or len(dec.weights) > bound:
                        problems.append("fractional LP1 optimum lacks a small Birkhoff decomposition")
                    elif any(per_perm[t] != v_oracle for t in dec.weights):
                        problems.append("decomposition uses a non-optimal permutation")
                    report.details.append({"trial": k, "fractional": True,
                                           "support": len(dec.weights)})
            report.record(not problems, {"trial": k, "c": _fmt_matrix(c), "problems": problems,
                                         "oracle": format_rational(v_oracle)})
    return report


def _triplet_objectives(inst: TspInstance, y_cost):
    obj = triplet_cost_vector(inst)
    obj2 = obj if not y_cost else obj + Objective(y_cost)
    return obj, obj2


def verify_equivalence_lp0_lp2(inst, trials: int = 20, seed: int = 0, costs=None,
                               y_cost=None) -> TheoremReport:
    """Triplet LP with and without the travel-leg block, on random instances of size ``n``.

    ``y_cost`` (a ``{VarId: value}`` map) adds leg costs to the extended
    problem only; it exists as a negative control and must break equality.
    """
    n = _size(inst, 1)
    m = n - 1
    if m not in (4, 5):
        raise TspefError(f"triplet equivalence suite needs m in (4, 5), got m={m}")
    if costs is None:
        rng = random.Random(seed)
        costs = [TspInstance.random(n, rng).d for _ in range(trials)]
    report = TheoremReport("equiv-lp0-lp2", {"n": n, "trials": len(costs), "seed": seed,
                                             "y_cost": bool(y_cost)})
    q0 = build_q0_triplet(n)
    q2 = build_q2bar(n)
    with _timed(report):
        for k, d in enumerate(costs):
            tinst = TspInstance(n, d)
            obj, obj2 = _triplet_objectives(tinst, y_cost)
            lp0 = solve(q0, obj)
            lp2 = solve(q2, obj2)
            problems = []
            if not (lp0.optimal and lp2.optimal):
                problems.append(f"status lp0={lp0.status} lp2={lp2.status}")
            else:
                if lp0.objective_value != lp2.objective_value:
                    problems.append(f"optima differ: lp0={lp0.objective_value} "
                                    f"lp2={lp2.objective_value}")
                wx = {v: c for v, c in lp2.point.items() if v.family != "Y"}
                if check_membership(q0, wx):
                    problems.append("LP2 (w,x)-part is not feasible for LP0")
                elif obj.value(wx) != lp0.objective_value:
                    problems.append("LP2 (w,x)-part misses the LP0 optimum")
                fixed = {v: lp0.point.get(v, Fraction(0)) for v in q2.variables if v.family != "Y"}
                if not fiber_feasible(q2, fixed).optimal:
                    problems.append("LP0 optimizer has an empty leg fiber")
            report.record(not problems, {"trial": k, "d": _fmt_matrix(d), "problems": problems})
            report.details.append({"trial": k,
                                   "lp0": format_rational(lp0.objective_value)
                                   if lp0.optimal else lp0.status})
    return report


def verify_applied_costs(inst: TspInstance) -> TheoremReport:
    """Triplet costs of each lifted permutation reproduce the tour cost exactly."""
    m = inst.m
    if not 4 <= m <= 6:
        raise TspefError(f"applied-costs suite needs 4 <= m <= 6, got m={m}")
    report = TheoremReport("applied-costs", {"n": inst.n, "d": _fmt_matrix(inst.d)})
    obj = triplet_cost_vector(inst)
    with _timed(report):
        for t in all_tours(m):
            w = tour_to_assignment(t)
            lifted = obj.value(as_point(lift_w_to_x(w)))
            expected = tour_cost(inst, assignment_to_tour(w))
            report.record(lifted == expected, {"tour": str(t), "triplet_cost": format_rational(lifted),
                                               "tour_cost": format_rational(expected)})
    return report


def verify_applied_costs_batch(ms=(4, 5), instances: int = 5, seed: int = 0) -> TheoremReport:
    report = TheoremReport("applied-costs", {"m": list(ms), "instances": instances, "seed": seed})
    rng = random.Random(seed)
    with _timed(report):
        for m in ms:
            for _ in range(instances):
                sub = verify_applied_costs(TspInstance.random(m + 1, rng))
                report.trials += sub.trials
                report.passed += sub.passed
                if sub.counterexample and report.counterexample is None:
                    report.counterexample = {**sub.counterexample, "d": sub.params["d"]}
    return report


def lp0_bound_study(inst: TspInstance) -> TheoremReport:
    """Check ``0 <= LP0 optimum <= optimal tour cost`` and report the gap."""
    m = inst.m
    if m not in (4, 5):
        raise TspefError(f"bound study needs m in (4, 5), got m={m}")
    if any(inst.d[i][j] < 0 for i in range(inst.n) for j in range(inst.n) if i != j):
        raise TspefError("bound study requires nonnegative travel costs")
    report = TheoremReport("bound-study", {"n": inst.n, "d": _fmt_matrix(inst.d)})
    q0 = build_q0_triplet(inst)
    obj = triplet_cost_vector(inst)
    with _timed(report):
        sol = solve(q0, obj)
        tour, best = brute_force_tsp(inst)
        lifted = as_point(tour_to_assignment(tour), lift_w_to_x(tour_to_assignment(tour)))
        lift_ok = not check_membership(q0, lifted) and obj.value(lifted) == best
        ok = sol.optimal and 0 <= sol.objective_value <= best and lift_ok
        lp0 = sol.objective_value if sol.optimal else None
        w = w_part(sol.point, m) if sol.optimal else None
        report.record(ok, {"lp0": str(lp0), "tour_opt": format_rational(best),
                           "lift_feasible": lift_ok})
        report.details.append({
            "lp0": format_rational(lp0) if lp0 is not None else None,
            "tour_opt": format_rational(best),
            "tour": str(tour),
            "gap": format_rational(best - lp0) if lp0 is not None else None,
            "w_integral": bool(w and w.is_permutation()),
        })
    return report


def bound_study_batch(n: int = 5, trials: int = 20, seed: int = 0) -> TheoremReport:
    report = TheoremReport("bound-study", {"n": n, "trials": trials, "seed": seed})
    rng = random.Random(seed)
    with _timed(report):
        for k in range(trials):
            sub = lp0_bound_study(TspInstance.random(n, rng))
            report.record(sub.ok, {"trial": k, **(sub.counterexample or {}), "d": sub.params["d"]})
            report.details.append({"trial": k, **sub.details[0]})
    return report


def verify_nonintegrality(n_enum: int = 4, n_probe: int = 5,
                          guard: int = 100_000) -> TheoremReport:
    """Exhibit fractional basic solutions of the leg-extended system.

    Enumerates vertices at ``n_enum`` by lexicographic pivoting and, at
    ``n_probe``, maximizes ``y[m,m-1]``; the optimum is at least 2 because the
    fractional point with ``y[4,3] = 2`` is feasible at n=5.
    """
    report = TheoremReport("nonintegral", {"n_enum": n_enum, "n_probe": n_probe})
    with _timed(report):
        vs = enumerate_vertices(build_q1bar(n_enum), guard=guard, method="lex")
        report.record(bool(vs.fractional), {"check": "enumeration", "vertices": len(vs)})
        report.details.append({"n": n_enum, "vertices": len(vs),
                               "fractional": len(vs.fractional),
                               "example": _fmt_point(vs.fractional[0]) if vs.fractional else None})

        q1 = build_q1bar(n_probe)
        target = Y(n_probe - 1, n_probe - 2)
        sol = solve(q1, Objective.maximize({target: 1}))
        best = -sol.objective_value if sol.optimal else None
        witness_ok = n_probe != 5 or not check_membership(q1, lemma2_point())
        fractional = sol.optimal and any(c.denominator != 1 for c in sol.point.values())
        probe_ok = sol.optimal and best >= 2 and witness_ok
        report.record(probe_ok, {"check": "probe", "max": str(best), "witness": witness_ok})
        report.details.append({"n": n_probe, "maximized": str(target),
                               "optimum": format_rational(best) if best is not None else None,
                               "optimum_point_fractional": fractional,
                               "witness_feasible": witness_ok})
    return report


def probe_q0_vertices(m: int = 4, probes: int = 20, seed: int = 0) -> dict:
    """Look for fractional vertices of the candidate triplet system with random objectives.

    Each simplex optimum is a vertex, so a single fractional optimum shows the
    vertices are not just the lifted permutations.  Full enumeration is out of
    reach here (tens of thousands of lexicographic bases already at m=4).
    """
    q0 = build_q0_triplet(m + 1)
    rng = random.Random(seed)
    fractional = None
    integral = 0
    for k in range(probes):
        obj = Objective({v: rng.randint(-10, 10) for v in q0.variables})
        sol = solve(q0, obj)
        if not sol.optimal:
            continue
        if all(c.denominator == 1 for c in sol.point.values()):
            integral += 1
        elif fractional is None:
            fractional = {"probe": k, "point": _fmt_point(sol.point)}
    return {"m": m, "probes": probes, "integral_optima": integral,
            "fractional_vertex": fractional, "bijection_refuted": fractional is not None}
