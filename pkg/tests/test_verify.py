import json
import random
from fractions import Fraction

import pytest

from tspef.consys import Y, build_q1bar, objective_on_w
from tspef.errors import TspefError
from tspef.instances import Tour, TspInstance, tour_to_assignment
from tspef.lp import check_membership, solve
from tspef.projection import w_part
from tspef.verify import (
    TheoremReport,
    bound_study_batch,
    decomposition_bound,
    lemma2_point,
    lp0_bound_study,
    probe_q0_vertices,
    verify_applied_costs,
    verify_applied_costs_batch,
    verify_equivalence_lap_lp1,
    verify_equivalence_lp0_lp2,
    verify_lemma1,
    verify_lemma2_counterexample,
    verify_nonintegrality,
)

from .oracles import tsp_by_recursion


def unit(n):
    return [[0 if i == j else 1 for j in range(n)] for i in range(n)]


def zeros(n):
    return [[0] * n for _ in range(n)]


def without_timing(report):
    data = report.to_json()
    data.pop("ms")
    return data


class TestReport:
    def test_record_keeps_first_counterexample(self):
        r = TheoremReport("t", {})
        r.record(True)
        r.record(False, {"k": 1})
        r.record(False, {"k": 2})
        assert (r.trials, r.passed, r.counterexample, r.ok) == (3, 1, {"k": 1}, False)
        assert r.summary().startswith("FAIL t: 1/3")

    def test_json(self):
        r = verify_lemma2_counterexample()
        assert json.loads(json.dumps(r.to_json()))["passed"] == 5

    def test_decomposition_bound(self):
        assert [decomposition_bound(m) for m in (2, 3, 4, 5)] == [2, 5, 10, 17]


class TestLemmas:
    def test_counterexample_point(self):
        p = lemma2_point()
        assert p[Y(4, 3)] == 2 and p[Y(3, 1)] == Fraction(1, 2)
        assert check_membership(build_q1bar(5), p) == []

    def test_counterexample_suite(self):
        r = verify_lemma2_counterexample()
        assert r.ok and r.passed == 5
        assert r.details[0]["tours"] == ["0->1->2->4->3->0", "0->4->3->1->2->0"]

    def test_extension_suite(self):
        r = verify_lemma1((3, 4))
        assert r.ok and r.trials == 6 + 24

    def test_nonintegrality(self):
        r = verify_nonintegrality()
        assert r.ok
        assert r.details[0]["fractional"] > 0
        assert Fraction(r.details[1]["optimum"]) > 1


class TestLapEquivalence:
    def test_seed_7(self):
        r = verify_equivalence_lap_lp1(4, trials=50, seed=7)
        assert r.ok and r.passed == 50

    def test_zero_costs(self):
        r = verify_equivalence_lap_lp1(3, costs=[zeros(3)])
        assert r.ok and r.trials == 1

    def test_unique_optimum_is_returned(self):
        target = tour_to_assignment(Tour((2, 1, 3, 4)))
        c = [[0 if target[i, r] else 10 for r in range(1, 5)] for i in range(1, 5)]
        assert verify_equivalence_lap_lp1(4, costs=[c]).ok
        assert w_part(solve(build_q1bar(5), objective_on_w(c)).point, 4) == target

    def test_fractional_optimum_certified(self):
        # ties between permutations often leave LP1 at a fractional face point
        rng = random.Random(3)
        costs = [[[rng.randint(0, 1) for _ in range(4)] for _ in range(4)] for _ in range(30)]
        assert verify_equivalence_lap_lp1(4, costs=costs).ok

    def test_size_guard(self):
        with pytest.raises(TspefError):
            verify_equivalence_lap_lp1(6, trials=1)


class TestTripletEquivalence:
    def test_unit_costs(self):
        r = verify_equivalence_lp0_lp2(5, costs=[unit(5)])
        assert r.ok and r.details[0]["lp0"] is not None

    def test_random_instances(self):
        assert verify_equivalence_lp0_lp2(5, trials=20, seed=1).passed == 20

    def test_leg_costs_break_equality(self):
        y_cost = {Y(i, j): 1 for i in range(5) for j in range(5) if i != j}
        r = verify_equivalence_lp0_lp2(5, costs=[unit(5)], y_cost=y_cost)
        assert not r.ok and "optima differ" in r.counterexample["problems"][0]

    def test_size_guard(self):
        with pytest.raises(TspefError):
            verify_equivalence_lp0_lp2(4)


class TestAppliedCosts:
    def test_zero_costs(self):
        r = verify_applied_costs(TspInstance(5, zeros(5)))
        assert r.ok and r.trials == 24

    def test_fixed_instance(self, inst5):
        assert verify_applied_costs(inst5).passed == 24

    def test_m5(self):
        rng = random.Random(11)
        r = verify_applied_costs(TspInstance.random(6, rng))
        assert r.ok and r.trials == 120

    def test_batch(self):
        r = verify_applied_costs_batch(ms=(4,), instances=3, seed=2)
        assert r.ok and r.trials == 72

    def test_guard(self):
        with pytest.raises(TspefError):
            verify_applied_costs(TspInstance(4, zeros(4)))


class TestBoundStudy:
    def test_zero_costs(self):
        r = lp0_bound_study(TspInstance(5, zeros(5)))
        assert r.ok and r.details[0]["lp0"] == "0" and r.details[0]["gap"] == "0"

    def test_unit_costs(self):
        r = lp0_bound_study(TspInstance(5, unit(5)))
        assert r.ok
        assert 0 <= Fraction(r.details[0]["lp0"]) <= 5 and r.details[0]["tour_opt"] == "5"

    def test_tour_oracle(self, inst5):
        r = lp0_bound_study(inst5)
        assert r.ok and Fraction(r.details[0]["tour_opt"]) == tsp_by_recursion(inst5.d) == 25

    def test_negative_costs_refused(self):
        d = unit(5)
        d[1][2] = -1
        with pytest.raises(TspefError):
            lp0_bound_study(TspInstance(5, d))

    def test_batch(self):
        r = bound_study_batch(trials=3, seed=4)
        assert r.ok and len(r.details) == 3


def test_q0_probe_finds_fractional_vertex():
    res = probe_q0_vertices(m=4, probes=20, seed=0)
    assert res["bijection_refuted"] and res["fractional_vertex"] is not None


def test_deterministic_under_seed():
    a = verify_equivalence_lap_lp1(3, trials=10, seed=5)
    b = verify_equivalence_lap_lp1(3, trials=10, seed=5)
    assert without_timing(a) == without_timing(b)
