"""The simplex implementation against scipy's HiGHS on random small LPs."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from drlcheck.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, is_feasible, solve_lp


def _scipy(c, A, rels, b, lo, hi):
    A = np.asarray(A, float)
    ub = [i for i, r in enumerate(rels) if r != "=="]
    eqs = [i for i, r in enumerate(rels) if r == "=="]
    sign = np.array([1.0 if rels[i] == "<=" else -1.0 for i in ub])
    res = linprog(
        c,
        A_ub=A[ub] * sign[:, None] if ub else None,
        b_ub=np.asarray(b)[ub] * sign if ub else None,
        A_eq=A[eqs] if eqs else None,
        b_eq=np.asarray(b)[eqs] if eqs else None,
        bounds=list(zip(lo, hi)),
        method="highs",
    )
    return {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status), res


@st.composite
def lps(draw):
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    m, n = draw(st.integers(1, 5)), draw(st.integers(1, 5))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(-4, 5, size=m).astype(float)
    rels = list(rng.choice(["<=", ">=", "=="], size=m, p=[0.45, 0.45, 0.1]))
    lo = rng.integers(-3, 1, size=n).astype(float)
    hi = lo + rng.integers(0, 5, size=n)
    if draw(st.booleans()):
        hi[rng.integers(n)] = np.inf
    c = rng.integers(-3, 4, size=n).astype(float)
    return c, A, rels, b, lo, hi


@settings(max_examples=300)
@given(lps())
def test_agrees_with_highs(lp):
    c, A, rels, b, lo, hi = lp
    ours = solve_lp(c, A, rels, b, lo, hi)
    status, ref = _scipy(c, A, rels, b, lo, hi)
    assert ours.status == status
    if status == OPTIMAL:
        assert ours.objective == pytest.approx(ref.fun, abs=1e-6)
        x = ours.x
        assert np.all(x >= lo - 1e-7) and np.all(x <= hi + 1e-7)
        lhs = A @ x
        for r, v, bi in zip(rels, lhs, b):
            assert {"<=": v <= bi + 1e-6, ">=": v >= bi - 1e-6, "==": abs(v - bi) <= 1e-6}[r]


@given(lps())
def test_feasibility_only_matches_full_solve(lp):
    c, A, rels, b, lo, hi = lp
    feasible = is_feasible(A, rels, b, lo, hi).status == OPTIMAL
    status, _ = _scipy(c, A, rels, b, lo, hi)
    assert feasible == (status != INFEASIBLE)


def test_simple_optimum():
    r = solve_lp([-1.0, -1.0], [[1.0, 2.0], [3.0, 1.0]], ["<=", "<="], [4.0, 6.0], [0, 0], [np.inf, np.inf])
    assert r.status == OPTIMAL
    np.testing.assert_allclose(r.x, [1.6, 1.2], atol=1e-9)


def test_infeasible():
    r = solve_lp([0.0], [[1.0], [1.0]], [">=", "<="], [2.0, 1.0], [-5], [5])
    assert r.status == INFEASIBLE


def test_unbounded():
    r = solve_lp([-1.0], [[1.0]], [">="], [0.0], [0], [np.inf])
    assert r.status == UNBOUNDED


def test_degenerate_cycling_example_terminates():
    # Beale's classic cycling LP
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    r = solve_lp(c, A, ["<=", "<=", "<="], [0, 0, 1], [0] * 4, [np.inf] * 4)
    assert r.status == OPTIMAL
    assert r.objective == pytest.approx(-0.05)
