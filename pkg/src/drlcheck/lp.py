"""Dense bounded-variable primal simplex.

Solves::

    minimize  c @ x
    s.t.      A[i] @ x  (<= | >= | ==)  b[i]
              lower <= x <= upper

Phase 1 minimizes the sum of artificial variables from a basis of
artificials; phase 2 optimizes ``c`` from the feasible basis. Pricing is
Dantzig's rule, switching to Bland's rule after ``5 * (rows + cols)``
iterations so degenerate problems cannot cycle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TAU_LP = 1e-7
_PIVOT_TOL = 1e-9
_REFACTOR_EVERY = 50

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int


class _Simplex:
    def __init__(self, A, b, lower, upper, tol):
        self.A = A
        self.b = b
        self.lo = lower
        self.hi = upper
        self.tol = tol
        self.m, self.n = A.shape
        self.iterations = 0

    def _start(self, basis):
        self.basis = list(basis)
        self.is_basic = np.zeros(self.n, dtype=bool)
        self.is_basic[self.basis] = True
        self._refactor()

    def _refactor(self):
        B = self.A[:, self.basis]
        self.Binv = np.linalg.inv(B)
        nb = ~self.is_basic
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs

    def run(self, c, max_iter, bland_after):
        m = self.m
        since_refactor = 0
        local = 0
        while True:
            if local >= max_iter:
                return ITERATION_LIMIT
            if since_refactor >= _REFACTOR_EVERY:
                self._refactor()
                since_refactor = 0
            y = c[self.basis] @ self.Binv
            d = c - y @ self.A
            d[self.is_basic] = 0.0
            x = self.x
            up = (x < self.hi - self.tol) & (d < -self.tol)
            down = (x > self.lo + self.tol) & (d > self.tol)
            up &= ~self.is_basic
            down &= ~self.is_basic
            elig = up | down
            if not elig.any():
                return OPTIMAL
            bland = local >= bland_after
            if bland:
                j = int(np.flatnonzero(elig)[0])
            else:
                score = np.where(elig, np.abs(d), -1.0)
                j = int(np.argmax(score))
            direction = 1.0 if up[j] else -1.0
            alpha = self.Binv @ self.A[:, j]
            rate = direction * alpha

            theta = self.hi[j] - self.lo[j]
            leave = -1
            xb = x[self.basis]
            lb = self.lo[self.basis]
            ub = self.hi[self.basis]
            with np.errstate(invalid="ignore", divide="ignore"):
                t_dec = np.where(rate > _PIVOT_TOL, (xb - lb) / rate, np.inf)
                t_inc = np.where(rate < -_PIVOT_TOL, (ub - xb) / -rate, np.inf)
            ratios = np.maximum(np.minimum(t_dec, t_inc), 0.0)
            ratios = np.where(np.isnan(ratios), np.inf, ratios)
            tmin = ratios.min() if m else np.inf
            if tmin < theta:
                ties = np.flatnonzero(ratios <= tmin + 1e-12)
                if bland:
                    leave = int(min(ties, key=lambda r: self.basis[r]))
                else:
                    leave = int(ties[np.argmax(np.abs(rate[ties]))])
                theta = ratios[leave]
            if not np.isfinite(theta):
                return UNBOUNDED

            x[self.basis] = xb - theta * rate
            x[j] += direction * theta
            self.iterations += 1
            local += 1
            since_refactor += 1
            if leave < 0:
                # bound flip, basis unchanged
                x[j] = self.hi[j] if direction > 0 else self.lo[j]
                continue
            out_var = self.basis[leave]
            x[out_var] = lb[leave] if rate[leave] > 0 else ub[leave]
            piv = alpha[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave] = row
            self.basis[leave] = j
            self.is_basic[j] = True
            self.is_basic[out_var] = False
            self.on_leave(out_var)

    def on_leave(self, var):
        pass


class _Phase1(_Simplex):
    def __init__(self, *args, first_artificial):
        super().__init__(*args)
        self.first_art = first_artificial

    def on_leave(self, var):
        if var >= self.first_art:
            self.hi[var] = 0.0
            self.x[var] = 0.0


def solve_lp(c, A, relations, b, lower, upper, tol: float = TAU_LP, max_iter: int | None = None) -> LPResult:
    """Solve a bounded LP. ``relations`` holds ``"<="``, ``">="`` or ``"=="`` per row.

    Variables with an infinite bound on both sides are allowed; they start
    at zero. Feasibility is judged at tolerance ``tol`` (absolute, per row
    and per bound).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    lower = np.asarray(lower, dtype=float).reshape(-1)
    upper = np.asarray(upper, dtype=float).reshape(-1)
    n = c.size
    m = b.size
    if A.size == 0:
        A = np.zeros((m, n))
    if A.shape != (m, n) or lower.size != n or upper.size != n or len(relations) != m:
        raise ValueError("inconsistent LP dimensions")
    if np.any(lower > upper + tol):
        return LPResult(INFEASIBLE, None, None, 0)
    upper = np.maximum(upper, lower)

    # structural | slacks | artificials
    slack_lo = np.zeros(m)
    slack_hi = np.zeros(m)
    for i, rel in enumerate(relations):
        if rel == "<=":
            slack_hi[i] = np.inf
        elif rel == ">=":
            slack_lo[i] = -np.inf
        elif rel != "==":
            raise ValueError(f"unknown relation {rel!r}")
    x0 = np.where(np.isfinite(lower), lower, np.where(np.isfinite(upper), upper, 0.0))
    resid = b - A @ x0
    sign = np.where(resid >= 0, 1.0, -1.0)
    full = np.hstack([A, np.eye(m), np.diag(sign)])
    lo = np.concatenate([lower, slack_lo, np.zeros(m)])
    hi = np.concatenate([upper, slack_hi, np.full(m, np.inf)])
    x = np.concatenate([x0, np.zeros(m), np.abs(resid)])
    total = n + 2 * m
    if max_iter is None:
        max_iter = 50 * (m + total) + 1000
    bland_after = 5 * (m + total)

    sx = _Phase1(full, b, lo, hi, tol, first_artificial=n + m)
    sx.x = x
    sx._start(range(n + m, n + 2 * m))
    c1 = np.zeros(total)
    c1[n + m:] = 1.0
    status = sx.run(c1, max_iter, bland_after)
    if status == ITERATION_LIMIT:
        return LPResult(status, None, None, sx.iterations)
    sx._refactor()
    if sx.x[n + m:].sum() > tol * max(1.0, m ** 0.5):
        return LPResult(INFEASIBLE, None, None, sx.iterations)
    sx.hi[n + m:] = 0.0

    if np.any(c != 0.0):
        c2 = np.zeros(total)
        c2[:n] = c
        status = sx.run(c2, max_iter, bland_after)
        if status != OPTIMAL:
            return LPResult(status, None, None, sx.iterations)
        sx._refactor()
    xs = np.clip(sx.x[:n], lower, upper)
    return LPResult(OPTIMAL, xs, float(c @ xs), sx.iterations)


def is_feasible(A, relations, b, lower, upper, tol: float = TAU_LP):
    """Phase-1 only; returns an :class:`LPResult` with a feasible point or INFEASIBLE."""
    n = len(lower)
    return solve_lp(np.zeros(n), A, relations, b, lower, upper, tol)
