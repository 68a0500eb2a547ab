import numpy as np
import pytest
from scipy.optimize import linprog

from matorder.hahnbanach.lp import DualSimplex, LPInstance, lp_feasible


def test_box_only_optimum_is_a_corner():
    lp = DualSimplex(3, objective=[1.0, -2.0, 0.0], bound=5.0)
    sol = lp.solve()
    assert sol.feasible
    assert np.allclose(sol.x[:2], [5.0, -5.0])
    assert sol.objective == pytest.approx(15.0)


def test_small_lp_by_hand():
    # max x + y  s.t.  x + 2y <= 4,  3x + y <= 6  ->  (8/5, 6/5), value 14/5
    lp = DualSimplex(2, objective=[1.0, 1.0], bound=100.0)
    lp.add_rows([[1.0, 2.0], [3.0, 1.0]], [4.0, 6.0])
    sol = lp.solve()
    assert np.allclose(sol.x, [1.6, 1.2])
    assert sol.objective == pytest.approx(2.8)


def test_infeasible_rows_reported():
    lp = DualSimplex(1, bound=10.0)
    lp.add_rows([[1.0], [-1.0]], [1.0, -2.0])   # x <= 1 and x >= 2
    sol = lp.solve()
    assert not sol.feasible
    assert sol.violating_row in (0, 1)


@pytest.mark.parametrize("rule", ["stable", "bland"])
def test_incremental_matches_highs(rule):
    for s in range(60):
        rng = np.random.default_rng(s)
        n, m = int(rng.integers(2, 7)), int(rng.integers(3, 25))
        A = rng.normal(size=(m, n))
        b = A @ rng.normal(size=n) + rng.uniform(0, 1, m)
        c = rng.normal(size=n)
        lp = DualSimplex(n, c, 10.0, rule=rule)
        for k in range(0, m, 4):
            lp.add_rows(A[k:k + 4], b[k:k + 4])
            sol = lp.solve()
            ref = linprog(-c, A_ub=A[:k + 4], b_ub=b[:k + 4], bounds=[(-10, 10)] * n, method="highs")
            assert sol.feasible
            assert sol.objective == pytest.approx(-ref.fun, abs=1e-7)
            assert lp.max_violation() <= 1e-8


def test_degenerate_lp_terminates():
    # many redundant rows through one vertex
    n = 4
    rows = [np.eye(n)[i] for i in range(n)] * 5 + [np.ones(n)] * 5
    rhs = [0.0] * (5 * n) + [0.0] * 5
    for rule in ("stable", "bland"):
        lp = DualSimplex(n, objective=np.ones(n), bound=1.0, rule=rule)
        lp.add_rows(np.array(rows), np.array(rhs))
        sol = lp.solve()
        assert sol.feasible and sol.objective == pytest.approx(0.0, abs=1e-9)


def test_lp_feasible_uses_ge_rows():
    inst = LPInstance(2, [[1.0, 0.0], [0.0, 1.0]], [1.0, 2.0], bound=10.0)
    sol = lp_feasible(inst)
    assert sol.feasible
    assert inst.max_violation(sol.x) <= 1e-9


def test_lp_instance_validation():
    with pytest.raises(ValueError):
        LPInstance(2, [[1.0]], [0.0])
    with pytest.raises(ValueError):
        LPInstance(1, [[np.inf]], [0.0])
    with pytest.raises(ValueError):
        DualSimplex(2, bound=0.0)
