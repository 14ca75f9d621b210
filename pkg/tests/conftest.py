import random
from fractions import Fraction

import pytest

from tspef.instances import Tour, TspInstance, tour_to_assignment

D5 = [[0, 12, 5, 30, 8],
      [7, 0, 22, 3, 17],
      [14, 9, 0, 26, 4],
      [11, 28, 6, 0, 19],
      [25, 2, 13, 10, 0]]


@pytest.fixture
def inst5():
    return TspInstance(5, D5)


@pytest.fixture
def w_hat1():
    return tour_to_assignment(Tour((1, 2, 4, 3)))


@pytest.fixture
def w_hat2():
    return tour_to_assignment(Tour((4, 3, 1, 2)))


@pytest.fixture
def rng():
    return random.Random(12345)


def frac_matrix(rows):
    return [[Fraction(v) for v in row] for row in rows]


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
