"""Exact rational linear programming over nonnegative variables.

Two-phase tableau simplex with Bland's rule on exact rationals (gmpy2's
``mpq`` when installed, :class:`fractions.Fraction` otherwise); results are
returned as Fractions.  Rows are dense lists but pivots
only touch the nonzero entries of the pivot row, which keeps the
transportation-type problems used here fast.  Instances with more than
``EXACT_LIMIT`` variables go to HiGHS (via scipy) and are reported with an
``eps`` of ``EPS_LP``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .distributions import LinearConstraint
from .errors import Infeasible

EXACT_LIMIT = 10_000
EPS_LP = 1e-7

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

_ZERO = _Q(0)
_ONE = _Q(1)


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


@dataclass(frozen=True)
class LPResult:
    value: object  # Fraction when exact, float otherwise
    x: tuple
    exact: bool = True
    eps: float = 0.0


def probability_simplex(n: int) -> LinearConstraint:
    one = Fraction(1)
    return LinearConstraint(tuple((i, one) for i in range(n)), one, "=")


class _Tableau:
    def __init__(self, n, constraints):
        rows, senses, rhs = [], [], []
        for c in constraints:
            row = {}
            for i, a in c.coeffs:
                row[i] = row.get(i, _ZERO) + _Q(a)
            rows.append(row)
            senses.append(c.sense)
            rhs.append(_Q(c.rhs))
        n_slack = sum(1 for s in senses if s != "=")
        self.n = n
        width = n + n_slack
        slack_col = n
        self.T = []
        self.basis = []
        artificial_rows = []
        for row, sense, b in zip(rows, senses, rhs):
            dense = [_ZERO] * (width + 1)
            for i, a in row.items():
                dense[i] = a
            slack = None
            if sense != "=":
                slack = slack_col
                dense[slack] = _ONE if sense == "<=" else -_ONE
                slack_col += 1
            dense[width] = b
            if b < 0:
                dense = [-v for v in dense]
            self.T.append(dense)
            if slack is not None and dense[slack] == 1:
                self.basis.append(slack)
            else:
                self.basis.append(None)
                artificial_rows.append(len(self.T) - 1)
        # append artificial columns in front of the rhs
        n_art = len(artificial_rows)
        self.first_art = width
        self.width = width + n_art
        for r, row in enumerate(self.T):
            b = row.pop()
            row.extend([_ZERO] * n_art)
            row.append(b)
        for k, r in enumerate(artificial_rows):
            self.T[r][width + k] = _ONE
            self.basis[r] = width + k

    def pivot(self, r, j, obj):
        T = self.T
        prow = T[r]
        piv = prow[j]
        if piv != 1:
            inv = 1 / piv
            for l in range(len(prow)):
                if prow[l]:
                    prow[l] *= inv
        nz = [l for l in range(len(prow)) if prow[l]]
        for k, row in enumerate(T):
            if k != r:
                f = row[j]
                if f:
                    for l in nz:
                        row[l] -= f * prow[l]
        f = obj[j]
        if f:
            for l in nz:
                obj[l] -= f * prow[l]
        self.basis[r] = j

    def objective_row(self, cost):
        obj = list(cost) + [_ZERO]
        for r, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.T[r]
                for l in range(len(obj)):
                    if row[l]:
                        obj[l] -= cb * row[l]
        return obj

    def run(self, obj, allowed):
        T = self.T
        while True:
            j = next((l for l in range(self.width) if allowed[l] and obj[l] < 0), None)
            if j is None:
                return
            best = None
            for r, row in enumerate(T):
                a = row[j]
                if a > 0:
                    ratio = row[-1] / a
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                raise RuntimeError("LP unbounded; impossible over the probability simplex")
            self.pivot(best[1], j, obj)


def _solve_exact(n, constraints, objective):
    tab = _Tableau(n, constraints)
    width = tab.width
    first_art = tab.first_art
    if first_art < width:
        cost = [_ZERO] * first_art + [_ONE] * (width - first_art)
        obj = tab.objective_row(cost)
        tab.run(obj, [True] * width)
        if -obj[-1] > 0:
            raise Infeasible("no point satisfies the constraints")
        # drive zero-level artificials out of the basis
        r = 0
        while r < len(tab.T):
            if tab.basis[r] >= first_art:
                row = tab.T[r]
                j = next((l for l in range(first_art) if row[l]), None)
                if j is None:
                    del tab.T[r]
                    del tab.basis[r]
                    continue
                tab.pivot(r, j, [_ZERO] * (width + 1))
            r += 1
    cost = [_Q(c) for c in objective] + [_ZERO] * (width - n)
    obj = tab.objective_row(cost)
    allowed = [l < first_art for l in range(width)]
    tab.run(obj, allowed)
    x = [Fraction(0)] * n
    for r, b in enumerate(tab.basis):
        if b < n:
            x[b] = _frac(tab.T[r][-1])
    return LPResult(value=_frac(-obj[-1]), x=tuple(x))


def _solve_float(n, constraints, objective):
    import numpy as np
    from scipy.optimize import linprog
    from scipy.sparse import lil_matrix

    eq = [c for c in constraints if c.sense == "="]
    ub = [c for c in constraints if c.sense != "="]

    def matrix(cs, flip):
        A = lil_matrix((len(cs), n))
        b = np.zeros(len(cs))
        for k, c in enumerate(cs):
            s = -1.0 if flip and c.sense == ">=" else 1.0
            for i, a in c.coeffs:
                A[k, i] += s * float(a)
            b[k] = s * float(c.rhs)
        return A.tocsr(), b

    kwargs = {}
    if eq:
        kwargs["A_eq"], kwargs["b_eq"] = matrix(eq, False)
    if ub:
        kwargs["A_ub"], kwargs["b_ub"] = matrix(ub, True)
    res = linprog(
        np.array([float(c) for c in objective]),
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9},
        **kwargs,
    )
    if res.status == 2:
        raise Infeasible("no point satisfies the constraints")
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    return LPResult(value=float(res.fun), x=tuple(float(v) for v in res.x), exact=False, eps=EPS_LP)


def minimize(
    n: int,
    constraints: Sequence[LinearConstraint],
    objective: Sequence,
    exact: Optional[bool] = None,
) -> LPResult:
    """Minimize ``objective . x`` over ``x >= 0`` meeting ``constraints``."""
    if exact is None:
        exact = n <= EXACT_LIMIT
    if exact:
        return _solve_exact(n, constraints, objective)
    return _solve_float(n, constraints, objective)


def maximize(n, constraints, objective, exact=None) -> LPResult:
    res = minimize(n, constraints, [-Fraction(c) for c in objective], exact)
    return LPResult(value=-res.value, x=res.x, exact=res.exact, eps=res.eps)


def feasible_point(n: int, constraints: Sequence[LinearConstraint], exact=None) -> tuple:
    """Some ``x >= 0`` meeting ``constraints``; raises Infeasible."""
    return minimize(n, constraints, [_ZERO] * n, exact).x
