import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tilepath.path import (
    CholeskyFactor,
    PathError,
    SingularGramError,
    candidate_alpha,
    candidates,
    full_vector,
    kkt_check,
    next_knot,
    on_support,
    path,
    solve_on_support,
)
from tilepath.problem import Problem, decompose

from conftest import random_problem
from oracles import lasso_solution, support_signs


def test_candidate_scalar(scalar):
    val, gam = candidate_alpha(scalar, 1.0, (), (), 0)
    assert val == pytest.approx(0.5, rel=1e-14)
    assert gam == 1


def test_candidate_identity(identity2):
    vals, gam = candidates(identity2, 1.0, (), ())
    np.testing.assert_allclose(vals, [0.5, 0.25], rtol=1e-14)
    np.testing.assert_array_equal(gam, [1, 1])


def test_leave_candidate_matches_linear_interpolation():
    # find a knot where an index leaves, then compare with the zero crossing of u_j
    bt = decompose(random_problem(10, 30, 4))  # this instance has an index leaving the path
    knots = path(bt, 0.5, 9)
    left = [k for k in range(1, len(knots)) if knots[k].direction == "left"]
    assert left
    k = left[0]
    prev = knots[k - 1]
    j = knots[k].index
    a_hi = prev.alpha
    a_lo = knots[k].alpha
    pos = prev.support.index(j)
    u1 = solve_on_support(bt, 0.5, prev.support, prev.signs, a_hi)[pos]
    u2 = solve_on_support(bt, 0.5, prev.support, prev.signs, 0.5 * (a_hi + a_lo))[pos]
    # u_j is affine in alpha: extrapolate to its zero
    a_mid = 0.5 * (a_hi + a_lo)
    zero = a_hi + (0 - u1) * (a_mid - a_hi) / (u2 - u1)
    val, _ = candidate_alpha(bt, 0.5, prev.support, prev.signs, j)
    assert val == pytest.approx(zero, rel=1e-9)
    assert val == pytest.approx(a_lo, rel=1e-12)


def test_next_knot_identity(identity2):
    a, movers, gam = next_knot(identity2, 1.0, (), (), np.inf)
    assert a == pytest.approx(0.5) and movers == (0,) and gam == {0: 1}
    a, movers, gam = next_knot(identity2, 1.0, (0,), (1,), 0.5)
    assert a == pytest.approx(0.25) and movers == (1,)
    a, movers, _ = next_knot(identity2, 1.0, (0, 1), (1, 1), 0.25)
    assert a is None and movers == ()


def test_tie_on_duplicated_columns():
    A = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    bt = decompose(Problem(A, np.array([1.0, 0.2])))
    a, movers, _ = next_knot(bt, 1.0, (), (), np.inf)
    assert movers == (0, 1)
    knots = path(bt, 1.0, 1)
    assert knots[0].index == 0 and knots[0].ties == (0, 1)


def test_path_identity(identity2):
    knots = path(identity2, 1.0, 2)
    assert [k.alpha for k in knots] == pytest.approx([0.5, 0.25], rel=1e-14)
    assert [k.support for k in knots] == [(0,), (0, 1)]
    assert [k.direction for k in knots] == ["entered", "entered"]
    assert path(identity2, 1.0, 0) == []


def test_path_validates():
    bt = decompose(random_problem(3, 5, 0))
    with pytest.raises(ValueError):
        path(bt, 1.0, 4)
    with pytest.raises(ValueError):
        path(bt, 1.0, 2, variant="elastic")


def test_path_knot_cap():
    bt = decompose(random_problem(6, 12, 1))
    with pytest.raises(PathError, match="beta"):
        path(bt, 1.0, 6, max_knots=2)


def test_path_matches_textbook_lasso_at_large_beta():
    from sklearn.linear_model import lars_path

    for seed in range(5):
        p = random_problem(10, 20, seed)
        bt = decompose(p)
        knots = path(bt, 1e12, 6)
        alphas, _, _ = lars_path(p.A, p.y, method="lasso")
        ref = alphas[: len(knots)] * p.A.shape[0]
        np.testing.assert_allclose([k.alpha for k in knots], ref, rtol=1e-5)


def test_solve_on_support_closed_forms(scalar):
    u = solve_on_support(scalar, 1.0, (0,), (1,), 0.25)
    assert u == pytest.approx([0.5], rel=1e-14)
    p = random_problem(6, 10, 3)
    bt = decompose(p)
    I = (1, 4, 7)
    B = bt.columns_B(0.8, I)
    ols = np.linalg.lstsq(B, bt.transformed_y(0.8), rcond=None)[0]
    np.testing.assert_allclose(solve_on_support(bt, 0.8, I, (1, -1, 1), 0.0), ols, atol=1e-10)


def test_solve_on_support_matches_proximal_oracle():
    p = random_problem(8, 15, 4)
    bt = decompose(p)
    beta = 0.3
    knots = path(bt, beta, 4)
    k = knots[2]
    alpha = 0.5 * (k.alpha + knots[3].alpha)
    u_ref, _, _ = lasso_solution(p.A, p.y, beta, alpha)
    assert support_signs(u_ref) == (k.support, k.signs)
    u = solve_on_support(bt, beta, k.support, k.signs, alpha)
    np.testing.assert_allclose(u, u_ref[list(k.support)], atol=1e-8)


def test_singular_gram():
    A = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    bt = decompose(Problem(A, np.ones(2)))
    with pytest.raises(SingularGramError) as info:
        on_support(bt, 1.0, (0, 1), (1, 1))
    assert info.value.cond > 1e12


def test_kkt_examples(identity2):
    B = identity2.columns_B(2.0)
    yb = identity2.transformed_y(2.0)
    assert kkt_check(identity2, 2.0, float(np.abs(B.T @ yb).max()), np.zeros(2)) == 0.0
    u = full_vector(2, (0,), solve_on_support(identity2, 2.0, (0,), (1,), 0.4))
    assert kkt_check(identity2, 2.0, 0.4, u) <= 1e-12
    u[0] += 0.1
    assert kkt_check(identity2, 2.0, 0.4, u) > 0


def _path_segments(knots):
    for a, b in zip(knots[:-1], knots[1:]):
        yield a, b.alpha


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("beta", [1e-4, 1.0, 50.0])
def test_path_properties(seed, beta):
    p = random_problem(8, 16, seed)
    bt = decompose(p)
    knots = path(bt, beta, 6)
    alphas = [k.alpha for k in knots]
    assert all(x > y for x, y in zip(alphas[:-1], alphas[1:]))
    for a, b in zip(knots[:-1], knots[1:]):
        assert abs(len(a.support) - len(b.support)) == 1
    for k, a_lo in _path_segments(knots):
        hi = k.alpha
        sol_hi = solve_on_support(bt, beta, k.support, k.signs, hi)
        sol_lo = solve_on_support(bt, beta, k.support, k.signs, a_lo)
        sol_mid = solve_on_support(bt, beta, k.support, k.signs, 0.5 * (hi + a_lo))
        np.testing.assert_allclose(sol_mid, 0.5 * (sol_hi + sol_lo), atol=1e-10 * max(1, np.abs(sol_hi).max()))
        for t in np.linspace(0.1, 0.9, 5):
            alpha = a_lo + t * (hi - a_lo)
            u = full_vector(bt.n, k.support, solve_on_support(bt, beta, k.support, k.signs, alpha))
            assert np.array_equal(np.sign(u[list(k.support)]), k.signs)
            assert kkt_check(bt, beta, alpha, u) <= 1e-8
    # continuity across each knot
    for a, b in zip(knots[:-1], knots[1:]):
        ua = full_vector(bt.n, a.support, solve_on_support(bt, beta, a.support, a.signs, b.alpha))
        ub = full_vector(bt.n, b.support, solve_on_support(bt, beta, b.support, b.signs, b.alpha))
        np.testing.assert_allclose(ua, ub, atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), logbeta=st.floats(-5, 2))
def test_lars_nested(seed, logbeta):
    bt = decompose(random_problem(7, 14, seed))
    knots = path(bt, 10.0**logbeta, 5, variant="lars")
    for a, b in zip(knots[:-1], knots[1:]):
        assert set(a.support) < set(b.support)
    assert all(k.direction == "entered" for k in knots)


def test_cholesky_factor_append_delete():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((10, 5))
    ch = CholeskyFactor()
    cols = []
    for j in range(5):
        ch.append(X[:, cols].T @ X[:, j] if cols else np.zeros(0), float(X[:, j] @ X[:, j]))
        cols.append(j)
    for pos in (2, 0):
        ch.delete(pos)
        cols.pop(pos)
        G = X[:, cols].T @ X[:, cols]
        b = rng.standard_normal(len(cols))
        np.testing.assert_allclose(ch.solve(b), np.linalg.solve(G, b), atol=1e-10)
