"""Exact linear constraint systems and the concrete polytope builders.

Variables come in three families: ``W`` (assignment, one per TSPAG node),
``Y`` (travel legs, one per ordered city pair) and ``X`` (triplets of TSPAG
nodes at strictly increasing stages).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple

from .errors import DegenerateConstructionError, EmptyInstanceError
from .instances import (
    NodeId,
    TspInstance,
    format_rational,
    parse_rational,
    triplet_keys,
)

EQ = "eq"
LE = "le"
GE = "ge"
FAMILIES = ("W", "Y", "X")


class VarId(NamedTuple):
    family: str
    index: tuple

    def __str__(self):
        if self.family == "W":
            return "w[{},{}]".format(*self.index)
        if self.family == "Y":
            return "y[{},{}]".format(*self.index)
        return "x[" + "|".join(f"{a},{b}" for a, b in self.index) + "]"

    @classmethod
    def parse(cls, text: str) -> "VarId":
        match = re.fullmatch(r"([wyx])\[(.*)\]", text.strip())
        if not match:
            raise ValueError(f"cannot parse variable name {text!r}")
        fam, body = match.groups()
        if fam == "w":
            return W(*map(int, body.split(",")))
        if fam == "y":
            return Y(*map(int, body.split(",")))
        nodes = [tuple(map(int, part.split(","))) for part in body.split("|")]
        return X(*nodes)


def W(level: int, stage: int) -> VarId:
    return VarId("W", NodeId(level, stage))


def Y(i: int, j: int) -> VarId:
    if i == j:
        raise ValueError(f"no self-loop leg ({i},{j})")
    return VarId("Y", (i, j))


def X(a, b, c) -> VarId:
    nodes = (NodeId(*a), NodeId(*b), NodeId(*c))
    if not nodes[0].stage < nodes[1].stage < nodes[2].stage:
        raise ValueError(f"triplet stages must increase: {nodes}")
    if len({n.level for n in nodes}) != 3:
        raise ValueError(f"triplet levels must be pairwise distinct: {nodes}")
    return VarId("X", nodes)


@dataclass(frozen=True)
class LinRow:
    """``sum coef[v] * v  (== | <=)  rhs``.  Build with :meth:`make`."""

    coef: tuple  # sorted ((var, Fraction), ...) with no zero entries
    rel: str
    rhs: Fraction
    label: str = ""

    @classmethod
    def make(cls, coef: Mapping, rel: str, rhs, label: str = "") -> "LinRow":
        rhs = parse_rational(rhs) if not isinstance(rhs, Fraction) else rhs
        merged: dict = {}
        for var, c in coef.items():
            merged[var] = merged.get(var, 0) + Fraction(c)
        if rel == GE:
            merged = {v: -c for v, c in merged.items()}
            rhs, rel = -rhs, LE
        if rel not in (EQ, LE):
            raise ValueError(f"unknown relation {rel!r}")
        items = tuple(sorted(((v, c) for v, c in merged.items() if c != 0),
                             key=lambda item: sort_key(item[0])))
        return cls(items, rel, rhs, label)

    @property
    def coefficients(self) -> dict:
        return dict(self.coef)

    def variables(self):
        return [v for v, _ in self.coef]

    def lhs(self, point: Mapping) -> Fraction:
        return sum((c * point.get(v, 0) for v, c in self.coef), Fraction(0))

    def satisfied(self, point: Mapping) -> bool:
        value = self.lhs(point)
        return value == self.rhs if self.rel == EQ else value <= self.rhs

    def same_constraint(self, other: "LinRow") -> bool:
        return self.coef == other.coef and self.rel == other.rel and self.rhs == other.rhs

    def __str__(self):
        terms = " ".join(f"{'+' if c > 0 else '-'} {abs(c) if abs(c) != 1 else ''}{v}"
                         for v, c in self.coef) or "0"
        op = "=" if self.rel == EQ else "<="
        return f"{self.label + ': ' if self.label else ''}{terms.lstrip('+ ')} {op} {self.rhs}"


def sort_key(var):
    if isinstance(var, VarId):
        return (FAMILIES.index(var.family) if var.family in FAMILIES else 9, var.index)
    return (10, repr(var))


@dataclass(frozen=True)
class ConstraintSystem:
    variables: tuple
    rows: tuple
    nonneg: frozenset = field(default_factory=frozenset)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "nonneg", frozenset(self.nonneg))
        declared = set(self.variables)
        if len(declared) != len(self.variables):
            raise ValueError("duplicate variable declarations")
        for row in self.rows:
            for var in row.variables():
                if var not in declared:
                    raise ValueError(f"row {row.label!r} uses undeclared variable {var}")
        if not self.nonneg <= declared:
            raise ValueError("nonnegativity declared on unknown variables")

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def count(self, rel: str | None = None, label_prefix: str = "") -> int:
        return sum(1 for r in self.rows
                   if (rel is None or r.rel == rel) and r.label.startswith(label_prefix))

    def family(self, fam: str) -> list:
        return [v for v in self.variables if v.family == fam]

    def with_rows(self, rows: Iterable[LinRow], name: str | None = None) -> "ConstraintSystem":
        return ConstraintSystem(self.variables, self.rows + tuple(rows), self.nonneg,
                                self.name if name is None else name)

    def replace_rows(self, rows: Iterable[LinRow]) -> "ConstraintSystem":
        return ConstraintSystem(self.variables, tuple(rows), self.nonneg, self.name)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "vars": [str(v) for v in self.variables],
            "rows": [
                {"label": r.label,
                 "coef": {str(v): format_rational(c) for v, c in r.coef},
                 "rel": r.rel,
                 "rhs": format_rational(r.rhs)}
                for r in self.rows
            ],
            "nonneg": [str(v) for v in self.variables if v in self.nonneg],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, data: Mapping) -> "ConstraintSystem":
        variables = [VarId.parse(s) for s in data["vars"]]
        rows = [LinRow.make({VarId.parse(k): parse_rational(c) for k, c in r["coef"].items()},
                            r["rel"], parse_rational(r["rhs"]), r.get("label", ""))
                for r in data["rows"]]
        return cls(variables, rows, {VarId.parse(s) for s in data["nonneg"]}, data.get("name", ""))


@dataclass(frozen=True)
class Objective:
    """Minimize ``sum coef[v] * v``."""

    coef: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coef",
                           {v: Fraction(c) for v, c in self.coef.items() if c != 0})

    def value(self, point: Mapping) -> Fraction:
        return sum((c * point.get(v, 0) for v, c in self.coef.items()), Fraction(0))

    def negated(self) -> "Objective":
        return Objective({v: -c for v, c in self.coef.items()})

    def __add__(self, other: "Objective") -> "Objective":
        merged = dict(self.coef)
        for v, c in other.coef.items():
            merged[v] = merged.get(v, 0) + c
        return Objective(merged)

    @classmethod
    def maximize(cls, coef: Mapping) -> "Objective":
        return cls(coef).negated()


def _w_vars(m):
    return [W(i, r) for i in range(1, m + 1) for r in range(1, m + 1)]


def _y_vars(n):
    return [Y(i, j) for i in range(n) for j in range(n) if i != j]


def _lap_rows(m):
    rows = []
    for i in range(1, m + 1):
        rows.append(LinRow.make({W(i, r): 1 for r in range(1, m + 1)}, EQ, 1, f"row_sum[{i}]"))
    for r in range(1, m + 1):
        rows.append(LinRow.make({W(i, r): 1 for i in range(1, m + 1)}, EQ, 1, f"col_sum[{r}]"))
    return rows


def build_lap_polytope(m: int) -> ConstraintSystem:
    """Assignment (Birkhoff) polytope: doubly stochastic ``m x m`` matrices."""
    if m < 1:
        raise EmptyInstanceError("assignment polytope needs m >= 1")
    wv = _w_vars(m)
    return ConstraintSystem(wv, _lap_rows(m), wv, name=f"A_n(m={m})")


def _leg_rows(m):
    """Rows tying the leg variables to the assignment variables."""
    n = m + 1
    rows = []
    for i in range(1, m + 1):
        rows.append(LinRow.make({Y(0, i): 1, W(i, 1): -1}, EQ, 0, f"depart[{i}]"))
    for i in range(1, m + 1):
        rows.append(LinRow.make({Y(i, 0): 1, W(i, m): -1}, EQ, 0, f"return[{i}]"))
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            if i == j:
                continue
            for r in range(1, m):
                rows.append(LinRow.make({W(i, r): 1, W(j, r + 1): 1, Y(i, j): -1}, LE, 1,
                                        f"succession[{i},{j},{r}]"))
    rows.append(LinRow.make({Y(i, j): 1 for i in range(1, n) for j in range(1, n) if i != j},
                            EQ, m - 1, "inner_legs"))
    return rows


def build_q1bar(inst: TspInstance | int) -> ConstraintSystem:
    """Assignment polytope extended by travel-leg variables ``y[i,j]``."""
    n = inst if isinstance(inst, int) else inst.n
    if n < 3:
        raise EmptyInstanceError(f"leg-extended system needs n >= 3, got n={n}")
    m = n - 1
    variables = _w_vars(m) + _y_vars(n)
    return ConstraintSystem(variables, _lap_rows(m) + _leg_rows(m), variables,
                            name=f"Q1bar(n={n})")


def _require_triplets(m):
    if m < 4:
        raise DegenerateConstructionError(
            f"triplet construction needs m >= 4 (got m={m}): at m=3 the stage pattern "
            "(1,2,3) is both the first and the last cost case, so the two overlap and "
            "the tour cost is not captured"
        )


def _triplet_rows(m):
    rows = []
    xs = []
    for key in triplet_keys(m):
        x = VarId("X", key)
        xs.append(x)
        a, b, c = key
        tag = f"{a}|{b}|{c}"
        for pos, node in enumerate(key):
            rows.append(LinRow.make({x: 1, W(*node): -1}, LE, 0, f"x_le_w{pos + 1}[{tag}]"))
        rows.append(LinRow.make({W(*a): 1, W(*b): 1, W(*c): 1, x: -1}, LE, 2, f"x_joint[{tag}]"))
    return xs, rows


def build_q0_triplet(inst: TspInstance | int) -> ConstraintSystem:
    """Assignment polytope extended by triplet variables with the min/joint linking rows."""
    n = inst if isinstance(inst, int) else inst.n
    m = n - 1
    _require_triplets(m)
    xs, xrows = _triplet_rows(m)
    variables = _w_vars(m) + xs
    return ConstraintSystem(variables, _lap_rows(m) + xrows, variables, name=f"Q0(n={n})")


def build_q2bar(inst: TspInstance | int) -> ConstraintSystem:
    """Triplet system together with the travel-leg block, sharing the assignment variables."""
    n = inst if isinstance(inst, int) else inst.n
    m = n - 1
    _require_triplets(m)
    xs, xrows = _triplet_rows(m)
    variables = _w_vars(m) + xs + _y_vars(n)
    return ConstraintSystem(variables, _lap_rows(m) + xrows + _leg_rows(m), variables,
                            name=f"Q2bar(n={n})")


def objective_on_w(c) -> Objective:
    """Linear objective ``sum c[i-1][r-1] * w[i,r]``; nothing on legs or triplets."""
    return Objective({W(i + 1, r + 1): parse_rational(v)
                      for i, row in enumerate(c) for r, v in enumerate(row)})


def triplet_cost_coefficient(inst: TspInstance, key) -> Fraction:
    """Cost placed on one triplet variable; zero outside the three cost patterns."""
    m = inst.m
    (i, p), (j, r), (k, s) = key
    d = inst.d
    if p != 1 or s != r + 1:
        return Fraction(0)
    if r == 2:
        return d[0][i] + d[i][j] + d[j][k]
    if r == m - 1:
        return d[j][k] + d[k][0]
    if 3 <= r <= m - 2:
        return d[j][k]
    return Fraction(0)


def triplet_cost_vector(inst: TspInstance) -> Objective:
    _require_triplets(inst.m)
    coef = {}
    for key in triplet_keys(inst.m):
        c = triplet_cost_coefficient(inst, key)
        if c:
            coef[VarId("X", key)] = c
    return Objective(coef)
