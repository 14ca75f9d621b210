"""Independent reference computations used by the tests.

Nothing here imports the package: these are second implementations written
directly from the definitions, kept deliberately naive.
"""

from fractions import Fraction
from itertools import combinations, permutations


def cycle_cost(d, order):
    seq = [0, *order, 0]
    total = Fraction(0)
    for a, b in zip(seq, seq[1:]):
        total += Fraction(d[a][b])
    return total


def tsp_by_recursion(d):
    """Minimum tour cost by depth-first search over partial paths (different code path)."""
    n = len(d)
    best = [None]

    def extend(last, visited, cost):
        if len(visited) == n - 1:
            total = cost + Fraction(d[last][0])
            if best[0] is None or total < best[0]:
                best[0] = total
            return
        for city in range(1, n):
            if city not in visited:
                extend(city, visited | {city}, cost + Fraction(d[last][city]))

    extend(0, frozenset(), Fraction(0))
    return best[0]


def lap_min(c):
    m = len(c)
    return min(sum(Fraction(c[p[r]][r]) for r in range(m)) for p in permutations(range(m)))


def permutation_matrices(m):
    """All m x m permutation matrices as sets of (level, stage) pairs, 1-based."""
    return [frozenset((p[r] + 1, r + 1) for r in range(m)) for p in permutations(range(m))]


def legs_of_order(order):
    seq = [0, *order, 0]
    return {(a, b) for a, b in zip(seq, seq[1:])}


def vertices_by_active_sets(variables, eq_rows, le_rows):
    """Vertices of {eq rows, le rows, x >= 0} in the original space.

    Rows are (coef_dict, rhs).  Tries every set of at most ``len(variables)``
    constraints from the inequality list (le rows plus nonnegativity) made
    tight together with all equalities, and keeps the feasible points that
    such a set determines uniquely.
    """
    nv = len(variables)
    ineq = [(dict(c), Fraction(b)) for c, b in le_rows]
    ineq += [({v: -1}, Fraction(0)) for v in variables]
    eqs = [(dict(c), Fraction(b)) for c, b in eq_rows]
    found = set()
    for size in range(nv + 1):
        for chosen in combinations(range(len(ineq)), size):
            x = _unique_solution(variables, eqs + [ineq[k] for k in chosen])
            if x is None:
                continue
            if all(sum(c.get(v, 0) * x[v] for v in variables) <= b for c, b in ineq):
                found.add(tuple(x[v] for v in variables))
    return found


def _unique_solution(variables, system):
    """Solve the (possibly over-determined) system; None unless it has exactly one solution."""
    mat = [[Fraction(c.get(v, 0)) for v in variables] + [Fraction(b)] for c, b in system]
    nv = len(variables)
    row = 0
    pivots = []
    for col in range(nv):
        piv = next((r for r in range(row, len(mat)) if mat[r][col] != 0), None)
        if piv is None:
            continue
        mat[row], mat[piv] = mat[piv], mat[row]
        p = mat[row][col]
        mat[row] = [a / p for a in mat[row]]
        for r in range(len(mat)):
            if r != row and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[row])]
        pivots.append(col)
        row += 1
    if any(all(a == 0 for a in r[:nv]) and r[nv] != 0 for r in mat):
        return None
    if len(pivots) < nv:
        return None
    return {variables[c]: mat[k][nv] for k, c in enumerate(pivots)}
