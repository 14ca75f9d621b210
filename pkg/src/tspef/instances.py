"""TSP instances, TSPAG node indexing, tours and their incidence vectors.

Cities are ``0..n-1`` with city 0 the depot; ``m = n - 1`` non-depot cities are
visited in some order.  A TSPAG node ``NodeId(level, stage)`` means "city
``level`` is the ``stage``-th city visited after the depot"; both coordinates
run over ``1..m``.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

from .errors import (
    EnumerationRefused,
    InstanceFormatError,
    InvalidTourError,
    NotAVertexError,
)

Rational = Fraction

MAX_ENUMERATION_M = 10

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


def parse_rational(value) -> Fraction:
    """Parse an int or a ``"p/q"`` / ``"p"`` string exactly.  Floats are refused."""
    if isinstance(value, bool):
        raise InstanceFormatError(f"boolean {value!r} is not a rational number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise InstanceFormatError(
            f"float literal {value!r} rejected: exact arithmetic only, "
            'write integers or "p/q" strings'
        )
    if isinstance(value, str):
        match = _RATIONAL_RE.match(value)
        if not match:
            raise InstanceFormatError(
                f"{value!r} is not an exact rational (expected an integer or 'p/q')"
            )
        num, den = match.groups()
        if den is not None and int(den) == 0:
            raise InstanceFormatError(f"{value!r} has a zero denominator")
        return Fraction(int(num), int(den) if den is not None else 1)
    raise InstanceFormatError(f"unsupported value {value!r} of type {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    return str(Fraction(q))


class NodeId(NamedTuple):
    level: int
    stage: int

    def __str__(self):
        return f"{self.level},{self.stage}"


@dataclass(frozen=True)
class TspInstance:
    n: int
    d: tuple

    def __init__(self, n: int, d: Sequence[Sequence]):
        if n < 2:
            raise InstanceFormatError(f"need at least 2 cities, got n={n}")
        if len(d) != n or any(len(row) != n for row in d):
            raise InstanceFormatError(f"cost matrix must be {n}x{n}")
        rows = tuple(
            tuple(parse_rational(v) for v in row) for row in d
        )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", rows)

    @property
    def m(self) -> int:
        return self.n - 1

    def cost(self, i: int, j: int) -> Fraction:
        return self.d[i][j]

    @classmethod
    def uniform(cls, n: int, value=1) -> "TspInstance":
        return cls(n, [[0 if i == j else value for j in range(n)] for i in range(n)])

    @classmethod
    def random(cls, n: int, rng: random.Random, low: int = 0, high: int = 100) -> "TspInstance":
        return cls(n, [[0 if i == j else rng.randint(low, high) for j in range(n)]
                       for i in range(n)])

    def to_json(self) -> dict:
        return {"n": self.n, "d": [[format_rational(v) for v in row] for row in self.d]}


@dataclass(frozen=True)
class Tour:
    """Visit order ``(p_1, ..., p_m)``; the tour is ``0 -> p_1 -> ... -> p_m -> 0``."""

    order: tuple

    def __init__(self, order: Iterable[int]):
        order = tuple(order)
        if sorted(order) != list(range(1, len(order) + 1)):
            raise InvalidTourError(f"{order} is not a permutation of 1..{len(order)}")
        object.__setattr__(self, "order", order)

    @property
    def m(self) -> int:
        return len(self.order)

    def cities(self) -> tuple:
        """The closed city sequence, depot at both ends."""
        return (0,) + self.order + (0,)

    def __str__(self):
        return "->".join(str(c) for c in self.cities())


class _SparseVector(Mapping):
    """Read-only map from index to Fraction; absent keys read as zero."""

    def __init__(self, values: Mapping):
        self._values = {k: Fraction(v) for k, v in values.items() if v != 0}

    def __getitem__(self, key) -> Fraction:
        self._check_key(key)
        return self._values.get(key, Fraction(0))

    def __iter__(self) -> Iterator:
        return iter(self.keys_all())

    def __len__(self) -> int:
        return sum(1 for _ in self.keys_all())

    def __eq__(self, other):
        if isinstance(other, _SparseVector):
            return type(self) is type(other) and self._values == other._values
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._values.items()))

    def positive(self) -> dict:
        return {k: v for k, v in self._values.items() if v > 0}

    def nonzero(self) -> dict:
        return dict(self._values)

    def is_integral(self) -> bool:
        return all(v.denominator == 1 for v in self._values.values())

    def _check_key(self, key):
        pass

    def keys_all(self):
        raise NotImplementedError


class AssignmentVector(_SparseVector):
    """Values on the ``m x m`` TSPAG nodes, keyed by ``NodeId(level, stage)``."""

    def __init__(self, m: int, values: Mapping):
        self.m = m
        super().__init__({NodeId(*k): v for k, v in values.items()})
        for key in self._values:
            self._check_key(key)

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence]) -> "AssignmentVector":
        """``rows[i-1][r-1]`` is the value of node (level i, stage r)."""
        m = len(rows)
        return cls(m, {(i + 1, r + 1): parse_rational(v)
                       for i, row in enumerate(rows) for r, v in enumerate(row)})

    def matrix(self) -> list:
        return [[self[i, r] for r in range(1, self.m + 1)] for i in range(1, self.m + 1)]

    def keys_all(self):
        return (NodeId(i, r) for i in range(1, self.m + 1) for r in range(1, self.m + 1))

    def _check_key(self, key):
        i, r = key
        if not (1 <= i <= self.m and 1 <= r <= self.m):
            raise KeyError(f"node {key} outside 1..{self.m}")

    def is_permutation(self) -> bool:
        if any(v != 1 for v in self._values.values()):
            return False
        if len(self._values) != self.m:
            return False
        levels = {k.level for k in self._values}
        stages = {k.stage for k in self._values}
        return len(levels) == self.m and len(stages) == self.m

    def doubly_stochastic(self) -> bool:
        mat = self.matrix()
        return (all(v >= 0 for row in mat for v in row)
                and all(sum(row) == 1 for row in mat)
                and all(sum(col) == 1 for col in zip(*mat)))

    def __add__(self, other):
        if not isinstance(other, AssignmentVector) or other.m != self.m:
            return NotImplemented
        keys = set(self._values) | set(other._values)
        return AssignmentVector(self.m, {k: self[k] + other[k] for k in keys})

    def __sub__(self, other):
        return self + (-1) * other

    def __rmul__(self, scalar):
        return AssignmentVector(self.m, {k: Fraction(scalar) * v for k, v in self._values.items()})

    def __repr__(self):
        body = ", ".join(f"w[{k}]={v}" for k, v in sorted(self._values.items()))
        return f"AssignmentVector(m={self.m}, {{{body}}})"


class LegVector(_SparseVector):
    """Values on ordered city pairs ``(i, j)``, ``i != j``, including the depot."""

    def __init__(self, n: int, values: Mapping):
        self.n = n
        super().__init__({tuple(k): v for k, v in values.items()})
        for key in self._values:
            self._check_key(key)

    def keys_all(self):
        return ((i, j) for i in range(self.n) for j in range(self.n) if i != j)

    def _check_key(self, key):
        i, j = key
        if i == j or not (0 <= i < self.n and 0 <= j < self.n):
            raise KeyError(f"no travel leg {key} among {self.n} cities")

    def __repr__(self):
        body = ", ".join(f"y[{i},{j}]={v}" for (i, j), v in sorted(self._values.items()))
        return f"LegVector(n={self.n}, {{{body}}})"


def valid_triplet(key) -> bool:
    (i, p), (j, r), (k, s) = key
    return p < r < s and len({i, j, k}) == 3


def triplet_keys(m: int) -> Iterator[tuple]:
    """All node triplets with increasing stages and pairwise distinct levels."""
    for p, r, s in itertools.combinations(range(1, m + 1), 3):
        for i, j, k in itertools.permutations(range(1, m + 1), 3):
            yield (NodeId(i, p), NodeId(j, r), NodeId(k, s))


class TripletVector(_SparseVector):
    def __init__(self, m: int, values: Mapping):
        self.m = m
        super().__init__({tuple(NodeId(*a) for a in k): v for k, v in values.items()})
        for key in self._values:
            self._check_key(key)

    def keys_all(self):
        return triplet_keys(self.m)

    def _check_key(self, key):
        if not valid_triplet(key) or any(not (1 <= a <= self.m) for node in key for a in node):
            raise KeyError(f"{key} is not a valid triplet for m={self.m}")

    def __repr__(self):
        body = ", ".join(f"x[{a}|{b}|{c}]={v}" for (a, b, c), v in sorted(self._values.items()))
        return f"TripletVector(m={self.m}, {{{body}}})"


def tour_cost(inst: TspInstance, t: Tour) -> Fraction:
    if t.m != inst.m:
        raise InvalidTourError(f"tour visits {t.m} cities, instance has m={inst.m}")
    seq = t.cities()
    return sum((inst.d[a][b] for a, b in zip(seq, seq[1:])), Fraction(0))


def tour_to_assignment(t: Tour) -> AssignmentVector:
    return AssignmentVector(t.m, {(city, stage): 1 for stage, city in enumerate(t.order, 1)})


def assignment_to_tour(w: AssignmentVector) -> Tour:
    if not w.is_permutation():
        raise NotAVertexError(f"not a permutation matrix: {w!r}")
    by_stage = {node.stage: node.level for node in w.positive()}
    return Tour(by_stage[r] for r in range(1, w.m + 1))


def tour_to_legs(t: Tour, n: int | None = None) -> LegVector:
    n = t.m + 1 if n is None else n
    if n != t.m + 1:
        raise InvalidTourError(f"tour visits {t.m} cities but n={n}")
    seq = t.cities()
    return LegVector(n, {(a, b): 1 for a, b in zip(seq, seq[1:])})


def all_tours(m: int) -> Iterator[Tour]:
    """Every tour, in lexicographic order of the visit sequence."""
    for perm in itertools.permutations(range(1, m + 1)):
        yield Tour(perm)


def _guard(m: int):
    if m > MAX_ENUMERATION_M:
        raise EnumerationRefused(
            f"m={m} exceeds the enumeration limit of {MAX_ENUMERATION_M} ({m}! orders)"
        )


def brute_force_tsp(inst: TspInstance) -> tuple[Tour, Fraction]:
    """Minimum-cost tour by full enumeration; ties go to the lexicographically smallest order."""
    _guard(inst.m)
    best = None
    for t in all_tours(inst.m):
        c = tour_cost(inst, t)
        if best is None or c < best[1]:
            best = (t, c)
    return best


def brute_force_lap(c: Sequence[Sequence]) -> tuple[AssignmentVector, Fraction]:
    """Minimum of ``sum c[i][r] w[i][r]`` over permutation matrices, by enumeration.

    ``c[i-1][r-1]`` is the cost of node (level i, stage r).  The permutation is
    read stage by stage (level at stage 1, level at stage 2, ...) and ties go to
    the lexicographically smallest such sequence.
    """
    m = len(c)
    _guard(m)
    c = [[parse_rational(v) for v in row] for row in c]
    best = None
    for perm in itertools.permutations(range(1, m + 1)):
        val = sum((c[level - 1][stage - 1] for stage, level in enumerate(perm, 1)), Fraction(0))
        if best is None or val < best[1]:
            best = (perm, val)
    perm, val = best
    return tour_to_assignment(Tour(perm)), val


def random_cost_matrix(size: int, rng: random.Random, low: int = 0, high: int = 100) -> list:
    return [[Fraction(rng.randint(low, high)) for _ in range(size)] for _ in range(size)]
