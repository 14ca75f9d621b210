import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tspef.errors import EnumerationRefused, InstanceFormatError, InvalidTourError, NotAVertexError
from tspef.instances import (
    AssignmentVector,
    NodeId,
    Tour,
    TspInstance,
    all_tours,
    assignment_to_tour,
    brute_force_lap,
    brute_force_tsp,
    parse_rational,
    tour_cost,
    tour_to_assignment,
    tour_to_legs,
)

from .conftest import D5
from .oracles import cycle_cost, lap_min, legs_of_order, permutation_matrices, tsp_by_recursion


def positive_nodes(w):
    return {(k.level, k.stage) for k in w.positive()}


class TestRationals:
    @pytest.mark.parametrize("raw, expected", [
        (3, Fraction(3)), ("1/3", Fraction(1, 3)), ("-4/6", Fraction(-2, 3)), ("7", Fraction(7)),
    ])
    def test_exact_parse(self, raw, expected):
        assert parse_rational(raw) == expected

    @pytest.mark.parametrize("raw", [0.5, "0.5", "1/0", True, None, "abc"])
    def test_rejects(self, raw):
        with pytest.raises(InstanceFormatError):
            parse_rational(raw)

    def test_float_message_names_policy(self):
        with pytest.raises(InstanceFormatError, match="exact arithmetic"):
            parse_rational(0.25)


class TestTourCost:
    def test_unit_costs(self):
        assert tour_cost(TspInstance.uniform(5), Tour((1, 2, 4, 3))) == 5

    def test_example_tour_legs(self, inst5):
        d = inst5.d
        expected = d[0][1] + d[1][2] + d[2][4] + d[4][3] + d[3][0]
        assert tour_cost(inst5, Tour((1, 2, 4, 3))) == expected == 59

    def test_fixed_matrix_n4(self):
        inst = TspInstance(4, [[0, 7, 3, 9], [2, 0, 8, 4], [6, 1, 0, 5], [3, 9, 2, 0]])
        assert tour_cost(inst, Tour((2, 3, 1))) == 19

    def test_wrong_length(self, inst5):
        with pytest.raises(InvalidTourError):
            tour_cost(inst5, Tour((1, 2, 3)))

    def test_invalid_order(self):
        with pytest.raises(InvalidTourError):
            Tour((1, 1, 2))

    def test_diagonal_ignored(self):
        a = TspInstance(3, [[0, 1, 2], [3, 0, 4], [5, 6, 0]])
        b = TspInstance(3, [[99, 1, 2], [3, -7, 4], [5, 6, "1/2"]])
        for t in all_tours(2):
            assert tour_cost(a, t) == tour_cost(b, t)


class TestAssignment:
    def test_example_vertices(self, w_hat1, w_hat2):
        assert positive_nodes(w_hat1) == {(1, 1), (2, 2), (4, 3), (3, 4)}
        assert positive_nodes(w_hat2) == {(4, 1), (3, 2), (1, 3), (2, 4)}

    def test_m1(self):
        w = tour_to_assignment(Tour((1,)))
        assert w.nonzero() == {NodeId(1, 1): 1}

    def test_inverse(self, w_hat1):
        assert assignment_to_tour(w_hat1) == Tour((1, 2, 4, 3))

    def test_identity(self):
        w = AssignmentVector.from_matrix([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        assert assignment_to_tour(w).order == (1, 2, 3)

    def test_row_sum_two_rejected(self):
        w = AssignmentVector.from_matrix([[1, 1, 0], [0, 0, 0], [0, 0, 1]])
        with pytest.raises(NotAVertexError):
            assignment_to_tour(w)

    def test_fractional_rejected(self):
        w = AssignmentVector.from_matrix([["1/2", "1/2"], ["1/2", "1/2"]])
        with pytest.raises(NotAVertexError):
            assignment_to_tour(w)

    @pytest.mark.parametrize("m", range(1, 8))
    def test_round_trip_exhaustive(self, m):
        for t in all_tours(m):
            assert assignment_to_tour(tour_to_assignment(t)) == t

    @pytest.mark.parametrize("m", range(1, 7))
    def test_bijection_with_permutation_matrices(self, m):
        images = {frozenset(positive_nodes(tour_to_assignment(t))) for t in all_tours(m)}
        assert images == set(permutation_matrices(m))
        assert len(images) == len(list(all_tours(m)))


class TestLegs:
    def test_example_tour(self):
        y = tour_to_legs(Tour((1, 2, 4, 3)), 5)
        assert set(y.positive()) == {(0, 1), (1, 2), (2, 4), (4, 3), (3, 0)}

    def test_two_cities(self):
        assert set(tour_to_legs(Tour((1,)), 2).positive()) == {(0, 1), (1, 0)}

    @pytest.mark.parametrize("m", range(1, 6))
    def test_cycle_structure(self, m):
        for t in all_tours(m):
            y = tour_to_legs(t)
            legs = set(y.positive())
            assert len(legs) == m + 1
            assert sum(1 for (i, _) in legs if i == 0) == 1
            assert sum(1 for (_, j) in legs if j == 0) == 1
            assert legs == legs_of_order(t.order)

    def test_dimension(self):
        assert len(tour_to_legs(Tour((2, 1, 3)))) == 4 * 3


class TestBruteForce:
    def test_unit_costs_tie_break(self):
        tour, cost = brute_force_tsp(TspInstance.uniform(4))
        assert (tour.order, cost) == ((1, 2, 3), 4)

    def test_fixed_asymmetric_n5(self):
        tour, cost = brute_force_tsp(TspInstance(5, D5))
        assert (tour.order, cost) == ((2, 4, 1, 3), 25)

    def test_n2(self):
        inst = TspInstance(2, [[0, 3], [4, 0]])
        assert brute_force_tsp(inst) == (Tour((1,)), 7)

    def test_guard(self):
        with pytest.raises(EnumerationRefused):
            brute_force_tsp(TspInstance.uniform(12))

    def test_lap_zero_diagonal(self):
        w, cost = brute_force_lap([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
        assert cost == 0 and assignment_to_tour(w).order == (1, 2, 3)

    def test_lap_fixed_m4(self):
        w, cost = brute_force_lap([[9, 2, 7, 8], [6, 4, 3, 7], [5, 8, 1, 8], [7, 6, 9, 4]])
        assert cost == 13
        assert assignment_to_tour(w).order == (2, 1, 3, 4)

    def test_lap_m1(self):
        w, cost = brute_force_lap([["5/2"]])
        assert cost == Fraction(5, 2) and w.nonzero() == {NodeId(1, 1): 1}

    @pytest.mark.parametrize("seed", range(8))
    def test_tsp_against_second_enumerator(self, seed):
        rng = random.Random(seed)
        n = rng.randint(2, 6)
        inst = TspInstance.random(n, rng)
        tour, cost = brute_force_tsp(inst)
        assert cost == tsp_by_recursion(inst.d) == cycle_cost(inst.d, tour.order)
        assert cost == min(tour_cost(inst, t) for t in all_tours(inst.m))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).flatmap(
    lambda m: st.lists(st.lists(st.integers(-20, 20), min_size=m, max_size=m),
                       min_size=m, max_size=m)))
def test_lap_matches_oracle(c):
    w, cost = brute_force_lap(c)
    assert cost == lap_min(c)
    assert w.is_permutation()
    assert sum(Fraction(c[k.level - 1][k.stage - 1]) for k in w.positive()) == cost


@settings(max_examples=40, deadline=None)
@given(st.permutations(list(range(1, 7))))
def test_legs_follow_order(order):
    t = Tour(order)
    assert set(tour_to_legs(t).positive()) == legs_of_order(order)
    assert assignment_to_tour(tour_to_assignment(t)) == t


def test_instance_rejects_float():
    with pytest.raises(InstanceFormatError):
        TspInstance(2, [[0, 1.5], [1, 0]])


def test_all_tours_lexicographic():
    orders = [t.order for t in all_tours(3)]
    assert orders == sorted(itertools.permutations([1, 2, 3]))
