"""Exact rational linear programming.

A small two-phase primal simplex over :class:`fractions.Fraction` with
Bland's pivoting rule, and vertex enumeration of low-dimensional polytopes by
enumerating subsets of tight constraints.

Everything is deterministic. Identical input yields identical output,
including the order of enumerated vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import gmpy2

from .errors import CapacityError, InputError
from .rational import fmt, to_fraction

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

SENSES = ("<=", "=", ">=")
ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple  # ((variable, Fraction), ...) in insertion order
    sense: str
    rhs: Fraction
    name: str | None = None


class Polytope:
    """A constraint system over named variables.

    Variables carry a lower bound (default 0); ``lower=None`` declares a free
    variable.
    """

    def __init__(self, name: str = "poly"):
        self.name = name
        self.variables: list[str] = []
        self.lower: dict[str, Fraction | None] = {}
        self.constraints: list[Constraint] = []

    @property
    def dimension(self) -> int:
        return len(self.variables)

    def add_variable(self, name: str, lower=0) -> str:
        if name in self.lower:
            raise InputError(f"duplicate variable {name!r}")
        self.variables.append(name)
        self.lower[name] = None if lower is None else to_fraction(lower)
        return name

    def add_constraint(self, coeffs: Mapping[str, object], sense: str, rhs, name: str | None = None) -> None:
        if sense not in SENSES:
            raise InputError(f"unknown relation {sense!r}")
        terms = []
        for var, c in coeffs.items():
            if var not in self.lower:
                raise InputError(f"constraint references undeclared variable {var!r}")
            c = to_fraction(c)
            if c:
                terms.append((var, c))
        self.constraints.append(Constraint(tuple(terms), sense, to_fraction(rhs), name))

    def _dump_lines(self) -> list[str]:
        lines = []
        for k, con in enumerate(self.constraints):
            label = con.name or f"c{k}"
            lhs = " ".join(f"{'+' if c > 0 else '-'} {fmt(abs(c))} {v}" for v, c in con.coeffs) or "0"
            lines.append(f"{label}: {lhs} {con.sense} {fmt(con.rhs)}")
        for v in self.variables:
            lo = self.lower[v]
            lines.append(f"bound: {v} free" if lo is None else f"bound: {v} >= {fmt(lo)}")
        return lines

    def dump(self) -> str:
        """Plain-text listing, one constraint per line."""
        return "\n".join([f"# {self.name}"] + self._dump_lines()) + "\n"


class LinearProgram(Polytope):
    """A maximization problem over a :class:`Polytope`."""

    def __init__(self, name: str = "lp"):
        super().__init__(name)
        self.objective: dict[str, Fraction] = {}

    def set_objective(self, coeffs: Mapping[str, object]) -> None:
        obj = {}
        for var, c in coeffs.items():
            if var not in self.lower:
                raise InputError(f"objective references undeclared variable {var!r}")
            c = to_fraction(c)
            if c:
                obj[var] = obj.get(var, ZERO) + c
        self.objective = obj

    def dump(self) -> str:
        obj = " ".join(f"{'+' if c > 0 else '-'} {fmt(abs(c))} {v}" for v, c in self.objective.items()) or "0"
        return "\n".join([f"# {self.name}", f"max: {obj}"] + self._dump_lines()) + "\n"


@dataclass
class LPResult:
    status: str
    value: Fraction | None = None
    assignment: dict[str, Fraction] = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# --------------------------------------------------------------------------
# simplex
#
# The tableau works on gmpy2.mpq, an exact rational type implemented in C;
# inputs and outputs are converted from and to Fraction at the boundary.

_Q0 = gmpy2.mpq(0)
_Q1 = gmpy2.mpq(1)


def _q(x: Fraction):
    return gmpy2.mpq(x.numerator, x.denominator)


def _f(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


class _Tableau:
    """Sparse dictionary tableau. Row ``i`` reads ``sum row[j] x_j = rhs[i]``; its basic column has coefficient 1."""

    def __init__(self, rows, rhs, basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.cost: dict = {}
        self.value = _Q0

    def pivot(self, r: int, e: int) -> None:
        row = self.rows[r]
        a = row[e]
        if a != 1:
            inv = 1 / a
            row = {j: v * inv for j, v in row.items()}
            self.rows[r] = row
            self.rhs[r] *= inv
        b = self.rhs[r]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other.get(e)
            if f is None:
                continue
            for j, v in row.items():
                nv = other.get(j, _Q0) - f * v
                if nv:
                    other[j] = nv
                else:
                    del other[j]
            self.rhs[i] -= f * b
        f = self.cost.get(e)
        if f is not None:
            cost = self.cost
            for j, v in row.items():
                nv = cost.get(j, _Q0) - f * v
                if nv:
                    cost[j] = nv
                else:
                    del cost[j]
            self.value += f * b
        self.basis[r] = e

    def run(self) -> str:
        """Maximize with Bland's rule. Returns OPTIMAL or UNBOUNDED."""
        while True:
            entering = None
            for j, d in self.cost.items():
                if d > 0 and (entering is None or j < entering):
                    entering = j
            if entering is None:
                return OPTIMAL
            best_i = -1
            best_ratio = None
            for i, row in enumerate(self.rows):
                a = row.get(entering)
                if a is None or a <= 0:
                    continue
                ratio = self.rhs[i] / a
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and self.basis[i] < self.basis[best_i])
                ):
                    best_ratio = ratio
                    best_i = i
            if best_i < 0:
                return UNBOUNDED
            self.pivot(best_i, entering)


def lp_solve(lp: LinearProgram) -> LPResult:
    """Solve ``lp`` exactly.

    Returns an :class:`LPResult` whose status is ``optimal``, ``infeasible``
    or ``unbounded``. An optimal result carries the objective value and a
    basic optimal assignment for every declared variable.
    """
    # map variables to nonnegative structural columns
    cols: dict[str, tuple] = {}
    ncols = 0
    for v in lp.variables:
        if lp.lower[v] is None:
            cols[v] = (ncols, ncols + 1)
            ncols += 2
        else:
            cols[v] = (ncols,)
            ncols += 1
    n_struct = ncols

    raw = []  # (row dict, rhs, slack sign or 0)
    for con in lp.constraints:
        row: dict[int, Fraction] = {}
        rhs = con.rhs
        for v, c in con.coeffs:
            lo = lp.lower[v]
            cs = cols[v]
            if lo is None:
                row[cs[0]] = row.get(cs[0], ZERO) + c
                row[cs[1]] = row.get(cs[1], ZERO) - c
            else:
                row[cs[0]] = row.get(cs[0], ZERO) + c
                rhs -= c * lo
        row = {j: c for j, c in row.items() if c}
        if not row:
            ok = (con.sense == "<=" and rhs >= 0) or (con.sense == ">=" and rhs <= 0) or (con.sense == "=" and rhs == 0)
            if not ok:
                return LPResult(INFEASIBLE)
            continue
        raw.append((row, rhs, {"<=": 1, ">=": -1, "=": 0}[con.sense]))

    # slack columns
    for k, (row, rhs, s) in enumerate(raw):
        if s:
            row[ncols] = gmpy2.mpq(s)
            ncols += 1
    n_real = ncols

    rows, rhs_list, basis = [], [], []
    artificial_rows = []
    for row, rhs, s in raw:
        if rhs < 0:
            row = {j: -c for j, c in row.items()}
            rhs = -rhs
        slack_col = max(row) if s else None
        if slack_col is not None and slack_col >= n_struct and row[slack_col] == 1:
            basis.append(slack_col)
        else:
            row[ncols] = _Q1
            basis.append(ncols)
            artificial_rows.append(len(rows))
            ncols += 1
        rows.append({j: (c if isinstance(c, type(_Q0)) else _q(c)) for j, c in row.items()})
        rhs_list.append(_q(rhs))

    tab = _Tableau(rows, rhs_list, basis)

    if artificial_rows:
        cost: dict[int, Fraction] = {}
        value = _Q0
        for i in artificial_rows:
            for j, c in rows[i].items():
                if j < n_real:
                    cost[j] = cost.get(j, _Q0) + c
            value -= rhs_list[i]
        tab.cost = {j: c for j, c in cost.items() if c}
        tab.value = value
        tab.run()
        if tab.value < 0:
            return LPResult(INFEASIBLE)
        # drive remaining artificials out of the basis
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] >= n_real:
                j = next((j for j in sorted(tab.rows[i]) if j < n_real), None)
                if j is None:
                    del tab.rows[i]
                    del tab.rhs[i]
                    del tab.basis[i]
                    continue
                tab.pivot(i, j)
            i += 1
        for row in tab.rows:
            for j in [j for j in row if j >= n_real]:
                del row[j]

    # phase two
    c_struct: dict[int, Fraction] = {}
    const = ZERO
    for v, c in lp.objective.items():
        lo = lp.lower[v]
        cs = cols[v]
        if lo is None:
            c_struct[cs[0]] = c_struct.get(cs[0], ZERO) + c
            c_struct[cs[1]] = c_struct.get(cs[1], ZERO) - c
        else:
            c_struct[cs[0]] = c_struct.get(cs[0], ZERO) + c
            const += c * lo
    cost = {j: _q(c) for j, c in c_struct.items() if c}
    value = _q(const)
    for i, b in enumerate(tab.basis):
        cb = cost.get(b)
        if cb:
            for j, a in tab.rows[i].items():
                nv = cost.get(j, _Q0) - cb * a
                if nv:
                    cost[j] = nv
                else:
                    cost.pop(j, None)
            value += cb * tab.rhs[i]
    for b in tab.basis:
        cost.pop(b, None)
    tab.cost = cost
    tab.value = value
    if tab.run() == UNBOUNDED:
        return LPResult(UNBOUNDED)

    y = [ZERO] * n_real
    for i, b in enumerate(tab.basis):
        y[b] = _f(tab.rhs[i])
    assignment = {}
    for v in lp.variables:
        lo = lp.lower[v]
        cs = cols[v]
        if lo is None:
            assignment[v] = y[cs[0]] - y[cs[1]]
        else:
            assignment[v] = lo + y[cs[0]]
    return LPResult(OPTIMAL, _f(tab.value), assignment)


def is_feasible(poly: Polytope) -> bool:
    lp = _as_lp(poly)
    lp.objective = {}
    return lp_solve(lp).status == OPTIMAL


def _as_lp(poly: Polytope) -> LinearProgram:
    lp = LinearProgram(poly.name)
    lp.variables = list(poly.variables)
    lp.lower = dict(poly.lower)
    lp.constraints = list(poly.constraints)
    return lp


# --------------------------------------------------------------------------
# linear algebra helpers


def solve_linear_system(matrix, rhs):
    """Solve a square system exactly. Returns ``None`` when singular."""
    n = len(matrix)
    aug = [list(matrix[i]) + [rhs[i]] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        prow = aug[col]
        inv = 1 / prow[col]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col] * inv
                row = aug[r]
                for c in range(col, n + 1):
                    if prow[c]:
                        row[c] -= f * prow[c]
    return [aug[i][n] / aug[i][i] for i in range(n)]


def rank(vectors) -> int:
    """Rank of a list of equal-length rational vectors."""
    rows = [list(map(Fraction, v)) for v in vectors]
    r = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col] / rows[r][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


def null_space(vectors, ncols: int):
    """Basis of ``{x : v . x = 0 for every v in vectors}``."""
    rows = [list(map(Fraction, v)) for v in vectors]
    pivots = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][col]
        rows[r] = [a * inv for a in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [ZERO] * ncols
        x[f] = ONE
        for i, pc in enumerate(pivots):
            x[pc] = -rows[i][f]
        basis.append(x)
    return basis


def _affine_parametrization(eqs, d):
    """Write ``{x : A x = b}`` as ``x0 + N t``. Returns ``None`` if inconsistent."""
    rows = [list(a) + [b] for a, b in eqs]
    pivots = []
    r = 0
    for col in range(d):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][col]
        rows[r] = [a * inv for a in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    for i in range(r, len(rows)):
        if rows[i][d] != 0:
            return None
    x0 = [ZERO] * d
    for i, pc in enumerate(pivots):
        x0[pc] = rows[i][d]
    free = [c for c in range(d) if c not in set(pivots)]
    basis = []
    for f in free:
        x = [ZERO] * d
        x[f] = ONE
        for i, pc in enumerate(pivots):
            x[pc] = -rows[i][f]
        basis.append(x)
    return x0, basis


# --------------------------------------------------------------------------
# vertex enumeration

DEFAULT_VERTEX_CAP = 16


def _inequality_rows(poly: Polytope):
    """Rows ``(a, b)`` meaning ``a . x <= b`` and equality rows ``(a, b)``."""
    idx = {v: k for k, v in enumerate(poly.variables)}
    d = len(poly.variables)
    ineq, eq = [], []
    for con in poly.constraints:
        a = [ZERO] * d
        for v, c in con.coeffs:
            a[idx[v]] += c
        if con.sense == "<=":
            ineq.append((a, con.rhs))
        elif con.sense == ">=":
            ineq.append(([-c for c in a], -con.rhs))
        else:
            eq.append((a, con.rhs))
    for v in poly.variables:
        lo = poly.lower[v]
        if lo is not None:
            a = [ZERO] * d
            a[idx[v]] = -ONE
            ineq.append((a, -lo))
    return ineq, eq


def _obviously_bounded(poly: Polytope, eq) -> bool:
    """Every variable is lower-bounded and sits in a nonnegative equality row."""
    idx = {v: k for k, v in enumerate(poly.variables)}
    if any(poly.lower[v] is None for v in poly.variables):
        return False
    covered = set()
    for a, _ in eq:
        if all(c >= 0 for c in a):
            covered.update(k for k, c in enumerate(a) if c > 0)
        elif all(c <= 0 for c in a):
            covered.update(k for k, c in enumerate(a) if c < 0)
    return len(covered) == len(idx)


def check_bounded(poly: Polytope) -> bool:
    """Probe ``max +x_j`` and ``max -x_j`` for every coordinate."""
    for v in poly.variables:
        for sign in (1, -1):
            lp = _as_lp(poly)
            lp.objective = {v: Fraction(sign)}
            if lp_solve(lp).status == UNBOUNDED:
                return False
    return True


def enumerate_vertices(poly: Polytope, cap: int = DEFAULT_VERTEX_CAP) -> list[dict[str, Fraction]]:
    """All vertices of a bounded polytope, sorted lexicographically.

    Tight-subset enumeration: equalities are always tight; the remaining
    ``d - rank`` tight rows are chosen among the inequalities (including
    lower bounds). Each nonsingular choice is solved exactly and kept when it
    satisfies every constraint. Duplicates from degenerate vertices are
    removed by exact equality.
    """
    d = poly.dimension
    if d > cap:
        raise CapacityError(f"polytope dimension {d} exceeds vertex-enumeration cap {cap}")
    ineq, eq = _inequality_rows(poly)
    param = _affine_parametrization(eq, d)
    if param is None:
        return []
    x0, basis = param
    if not (_obviously_bounded(poly, eq) or check_bounded(poly)):
        raise InputError(f"polytope {poly.name!r} is unbounded")
    k = len(basis)

    # project the inequalities onto the affine hull of the equalities
    proj = []
    for a, b in ineq:
        g = [sum((ai * ni for ai, ni in zip(a, n) if ai), ZERO) for n in basis]
        h = b - sum((ai * xi for ai, xi in zip(a, x0) if ai), ZERO)
        if any(g):
            proj.append((g, h))
        elif h < 0:
            return []

    def lift(t):
        x = list(x0)
        for tj, n in zip(t, basis):
            if tj:
                for i, ni in enumerate(n):
                    if ni:
                        x[i] += tj * ni
        return tuple(x)

    def feasible(t):
        for g, h in proj:
            if sum((gi * ti for gi, ti in zip(g, t) if gi), ZERO) > h:
                return False
        return True

    found = set()
    if k == 0:
        if feasible(()):
            found.add(lift(()))
    else:
        m = len(proj)
        # depth-first over increasing index subsets with incremental elimination;
        # a dependent row prunes the whole subtree
        def extend(start, echelon):
            depth = len(echelon)
            for i in range(start, m - (k - depth) + 1):
                g, h = proj[i]
                vec = list(g) + [h]
                for piv_col, erow in echelon:
                    f = vec[piv_col]
                    if f:
                        vec = [x - f * y for x, y in zip(vec, erow)]
                piv_col = next((c for c in range(k) if vec[c] != 0), None)
                if piv_col is None:
                    continue
                inv = 1 / vec[piv_col]
                vec = [x * inv for x in vec]
                new = []
                for pc, erow in echelon:
                    f = erow[piv_col]
                    if f:
                        erow = [x - f * y for x, y in zip(erow, vec)]
                    new.append((pc, erow))
                new.append((piv_col, vec))
                if depth + 1 == k:
                    t = [ZERO] * k
                    for pc, erow in new:
                        t[pc] = erow[k]
                    if feasible(t):
                        found.add(lift(t))
                else:
                    extend(i + 1, new)

        extend(0, [])

    return [dict(zip(poly.variables, x)) for x in sorted(found)]
