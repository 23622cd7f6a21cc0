"""Dense two-phase revised simplex and a vertex-enumeration oracle.

Both solvers return nonnegative constraint multipliers ``dual``. For the
natural pairs (``max`` with ``<=``, ``min`` with ``>=``) they satisfy
``dual @ b == objective`` with A'y >= cost (max) or A'y <= cost (min); for
the other two combinations the multipliers enter with a minus sign.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .disc import FiniteLP
from .errors import ConfigurationError, NumericalError

PIVOT_TOL = 1e-9
RATIO_TOL = 1e-10
COST_TOL = 1e-9
FEAS_TOL = 1e-9
REFACTOR_EVERY = 50
STALL_LIMIT = 200
BRUTE_FORCE_CAP = 14

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPSolution:
    status: str
    primal: Optional[np.ndarray] = None
    dual: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0
    primal_residual: float = 0.0
    dual_residual: float = 0.0
    gap: float = 0.0
    complementarity: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _canonical(lp: FiniteLP):
    """Rewrite as: minimize g'x subject to A x <= b, x >= 0."""
    g = -lp.cost if lp.sense == "max" else lp.cost.copy()
    if lp.relation == "<=":
        return g, lp.A.copy(), lp.b.copy()
    return g, -lp.A, -lp.b


def _dual_sign(lp: FiniteLP) -> float:
    natural = (lp.sense == "max") == (lp.relation == "<=")
    return 1.0 if natural else -1.0


def _finish(lp: FiniteLP, x: np.ndarray, y: np.ndarray, iterations: int) -> LPSolution:
    obj = lp.objective(x)
    sign = _dual_sign(lp)
    red = sign * (lp.A.T @ y) - lp.cost
    if lp.sense == "min":
        red = -red
    dual_res = float(max(np.max(-red, initial=0.0), np.max(-y, initial=0.0), 0.0))
    slack = np.abs(lp.A @ x - lp.b)
    comp = float(max(np.max(np.abs(y) * slack, initial=0.0), np.max(np.abs(x * red), initial=0.0)))
    return LPSolution(
        status=OPTIMAL,
        primal=x,
        dual=y,
        objective=obj,
        iterations=iterations,
        primal_residual=lp.violation(x),
        dual_residual=dual_res,
        gap=abs(obj - sign * float(lp.b @ y)),
        complementarity=comp,
    )


class RevisedSimplex:
    """Working state for one solve: basis, explicit inverse, pivot counters.

    Entering variable: most negative reduced cost, lowest index on ties;
    after ``STALL_LIMIT`` consecutive non-improving pivots Bland's rule takes
    over until the objective moves again. Leaving variable: minimum ratio,
    ties broken by the smallest basic variable index.
    """

    def __init__(self, max_iterations: Optional[int] = None):
        self.max_iterations = max_iterations
        self.iterations = 0

    def _setup(self, lp: FiniteLP):
        g, A, b = _canonical(lp)
        m, n = A.shape
        flip = np.where(b < 0, -1.0, 1.0)
        art_rows = np.nonzero(b < 0)[0]
        n_art = art_rows.size
        M = np.zeros((m, n + m + n_art))
        M[:, :n] = A * flip[:, None]
        M[:, n : n + m] = np.diag(flip)
        for k, i in enumerate(art_rows):
            M[i, n + m + k] = 1.0
        basis = list(range(n, n + m))
        for k, i in enumerate(art_rows):
            basis[i] = n + m + k
        self.g, self.n, self.m, self.n_art = g, n, m, n_art
        self.M, self.rhs, self.flip = M, b * flip, flip
        self.basis = basis
        self.Binv = np.eye(m)
        self.xB = self.rhs.copy()
        self.pivots_since_refactor = 0

    def _refactor(self):
        Bm = self.M[:, self.basis]
        try:
            self.Binv = np.linalg.solve(Bm, np.eye(self.m))
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular basis during refactorization", np.linalg.cond(Bm)) from exc
        cond = np.linalg.cond(Bm)
        if not np.isfinite(cond) or cond > 1e13:
            raise NumericalError(f"basis condition estimate {cond:.3g} too large", cond)
        self.xB = self.Binv @ self.rhs
        self.xB[np.abs(self.xB) < 1e-13] = 0.0
        self.pivots_since_refactor = 0

    def _pivot(self, r: int, e: int, col: np.ndarray):
        piv = col[r]
        self.Binv[r] /= piv
        self.xB[r] /= piv
        for i in np.nonzero(col)[0]:
            if i != r:
                self.Binv[i] -= col[i] * self.Binv[r]
                self.xB[i] -= col[i] * self.xB[r]
        self.basis[r] = e
        self.iterations += 1
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= REFACTOR_EVERY:
            self._refactor()

    def _run(self, cost: np.ndarray, allowed: np.ndarray) -> str:
        limit = self.max_iterations or 50 * (self.m + self.M.shape[1]) + 1000
        stall = 0
        while True:
            if self.iterations > limit:
                raise NumericalError(f"iteration limit {limit} reached")
            pi = cost[self.basis] @ self.Binv
            red = cost - pi @ self.M
            red[self.basis] = 0.0
            cand = np.nonzero(allowed & (red < -COST_TOL))[0]
            if cand.size == 0:
                return OPTIMAL
            if stall >= STALL_LIMIT:
                e = int(cand[0])
            else:
                e = int(cand[np.argmin(red[cand])])
            col = self.Binv @ self.M[:, e]
            rows = np.nonzero(col > PIVOT_TOL)[0]
            if rows.size == 0:
                return UNBOUNDED
            ratios = np.maximum(self.xB[rows], 0.0) / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + RATIO_TOL]
            r = int(min(ties, key=lambda i: self.basis[i]))
            step = max(self.xB[r], 0.0) / col[r]
            stall = stall + 1 if step * -red[e] <= 1e-14 else 0
            self._pivot(r, e, col)

    def solve(self, lp: FiniteLP) -> LPSolution:
        self.iterations = 0
        self._setup(lp)
        n, m, n_art = self.n, self.m, self.n_art
        total = self.M.shape[1]
        is_art = np.zeros(total, dtype=bool)
        is_art[n + m :] = True

        if n_art:
            phase1 = np.where(is_art, 1.0, 0.0)
            self._run(phase1, ~is_art)
            self._refactor()
            infeas = float(phase1[self.basis] @ self.xB)
            if infeas > FEAS_TOL * (1.0 + np.abs(self.rhs).max(initial=0.0)):
                return LPSolution(status=INFEASIBLE, iterations=self.iterations)
            self._drive_out_artificials(is_art)

        cost = np.zeros(total)
        cost[:n] = self.g
        status = self._run(cost, ~is_art)
        if status == UNBOUNDED:
            return LPSolution(status=UNBOUNDED, iterations=self.iterations)
        self._refactor()
        x_all = np.zeros(total)
        x_all[self.basis] = np.maximum(self.xB, 0.0)
        x = x_all[:n]
        pi = cost[self.basis] @ self.Binv
        y = np.maximum(-self.flip * pi, 0.0)
        return _finish(lp, x, y, self.iterations)

    def _drive_out_artificials(self, is_art: np.ndarray):
        for r in range(self.m):
            if not is_art[self.basis[r]]:
                continue
            row = self.Binv[r] @ self.M
            row[is_art] = 0.0
            row[self.basis] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > PIVOT_TOL:
                self._pivot(r, j, self.Binv @ self.M[:, j])
            # otherwise the row is redundant and the artificial stays basic at zero


def solve(lp: FiniteLP) -> LPSolution:
    return RevisedSimplex().solve(lp)


# ---------------------------------------------------------------------------
# brute-force oracle


def _enumerate_min(g: np.ndarray, A: np.ndarray, b: np.ndarray, tol: float):
    """Vertex enumeration for min g'x, A x <= b, x >= 0. Returns (status, x)."""
    m, n = A.shape
    M = np.hstack([A, np.eye(m)])
    cost = np.concatenate([g, np.zeros(m)])
    best_x, best_val = None, np.inf
    for S in itertools.combinations(range(n + m), m):
        Bs = M[:, S]
        if m and abs(np.linalg.det(Bs)) < 1e-12:
            continue
        xs = np.linalg.solve(Bs, b) if m else np.zeros(0)
        if np.any(xs < -tol):
            continue
        x = np.zeros(n + m)
        x[list(S)] = np.maximum(xs, 0.0)
        val = cost @ x
        if val < best_val - tol:
            best_val, best_x = val, x
    if best_x is None:
        return INFEASIBLE, None
    # extreme rays of {d >= 0 : M d = 0, 1'd = 1}
    R = np.vstack([M, np.ones(n + m)])
    rhs = np.zeros(m + 1)
    rhs[-1] = 1.0
    for S in itertools.combinations(range(n + m), m + 1):
        Bs = R[:, S]
        if abs(np.linalg.det(Bs)) < 1e-12:
            continue
        ds = np.linalg.solve(Bs, rhs)
        if np.any(ds < -tol):
            continue
        d = np.zeros(n + m)
        d[list(S)] = ds
        if cost @ d < -tol:
            return UNBOUNDED, None
    return OPTIMAL, best_x[:n]


def brute_force_solve(lp: FiniteLP, tol: float = 1e-10) -> LPSolution:
    """Enumerate every basic solution; refuses problems with more than 14 variables + constraints."""
    if lp.n_vars + lp.n_cons > BRUTE_FORCE_CAP:
        raise ConfigurationError(
            f"brute force limited to {BRUTE_FORCE_CAP} variables + constraints, got {lp.n_vars + lp.n_cons}"
        )
    g, A, b = _canonical(lp)
    status, x = _enumerate_min(g, A, b, tol)
    if status != OPTIMAL:
        return LPSolution(status=status)
    # dual of min g'x, Ax <= b, x >= 0 is min b'y, -A'y <= g, y >= 0 (up to sign)
    dstatus, y = _enumerate_min(b, -A.T, g, tol)
    if dstatus != OPTIMAL:
        raise NumericalError("oracle found a primal optimum but no dual optimum")
    return _finish(lp, x, y, 0)
