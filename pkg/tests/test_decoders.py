import numpy as np
import pytest

from tilepath.decoders import iht_warm, lasso_supports, omp, plasso_supports, preconditioner
from tilepath.path import path
from tilepath.problem import Problem, decompose
from tilepath.tiling import build

from conftest import random_problem


def _sparse_instance(m, n, s, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    u = np.zeros(n)
    idx = np.sort(rng.choice(n, s, replace=False))
    u[idx] = rng.uniform(1.5, 5, s) * rng.choice([-1, 1], s)
    return Problem(A, A @ u), tuple(int(i) for i in idx)


def test_omp_single_column():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 8))
    res = omp(Problem(A, 2.5 * A[:, 3]), 1)
    assert res.supports == [(3,)]
    assert res.coefficients[0] == pytest.approx([2.5])


def test_omp_identity():
    assert omp(Problem(np.eye(2), np.array([1.0, 0.5])), 1).supports == [(0,)]


def test_omp_noiseless_recovery():
    hits = sum(omp(p, 3).supports == [t] for p, t in (_sparse_instance(20, 50, 3, s) for s in range(30)))
    assert hits >= 27


def test_omp_matches_reference_on_normalised_columns():
    from sklearn.linear_model import OrthogonalMatchingPursuit

    for seed in range(10):
        p, _ = _sparse_instance(20, 50, 3, seed)
        An = p.A / np.linalg.norm(p.A, axis=0)
        ref = OrthogonalMatchingPursuit(n_nonzero_coefs=3, fit_intercept=False).fit(An, p.y)
        assert omp(p, 3).supports[0] == tuple(int(i) for i in np.flatnonzero(ref.coef_))


def test_omp_rank_deficient():
    A = np.array([[1.0, 2.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]])
    with pytest.raises(np.linalg.LinAlgError):
        omp(Problem(A, np.array([1.0, 0.0])), 2)
    with pytest.raises(ValueError):
        omp(Problem(A, np.array([1.0, 0.0])), 3)


def test_iht_noiseless_recovery():
    hits = 0
    for seed in range(20):
        p, truth = _sparse_instance(40, 60, 3, seed)
        res = iht_warm(p, 3)
        assert len(res.supports[0]) == 3
        hits += res.supports[0] == truth
    assert hits >= 18


def test_iht_empty_and_fixed_point():
    p, truth = _sparse_instance(10, 20, 2, 0)
    assert iht_warm(p, 0).supports == [()]
    # orthonormal A: the warm start already holds the answer
    u = np.zeros(6)
    u[[1, 4]] = [3.0, -2.0]
    res = iht_warm(Problem(np.eye(6), u), 2)
    assert res.supports == [(1, 4)]
    assert res.meta["iterations"] <= 2
    np.testing.assert_allclose(res.coefficients[0], [3.0, -2.0])


def test_lasso_supports_examples():
    p = Problem(np.eye(2), np.array([1.0, 0.5]))
    assert lasso_supports(p, 2).supports == [(), (0,), (0, 1)]
    assert lasso_supports(p, 0).supports == [()]
    dup = Problem(np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]), np.array([1.0, 0.2]))
    knots = path(decompose(dup), 1e12, 1)
    assert knots[0].ties == (0, 1)


def test_plasso_orthonormal_rows_match_lasso():
    rng = np.random.default_rng(1)
    Q, _ = np.linalg.qr(rng.standard_normal((12, 6)))
    p = Problem(Q.T, rng.standard_normal(6))
    assert plasso_supports(p, 4).supports == lasso_supports(p, 4).supports


def test_plasso_rank_deficient():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 10))
    F = preconditioner(A)
    assert np.isfinite(F).all()
    res = plasso_supports(Problem(A, A @ rng.standard_normal(10)), 2)
    assert res.supports[0] == ()


def test_tiling_endpoints_contain_baselines():
    for seed in range(3):
        p = random_problem(10, 20, 200 + seed)
        bt = decompose(p)
        g = build(bt, (1e-8, 1e12), s_max=4)
        found = {sup for sup, _ in g.supports()}
        assert set(lasso_supports(p, 4, bt=bt).supports) <= found
        assert set(plasso_supports(p, 4).supports) <= found


def test_plasso_matches_small_beta_path():
    for seed in range(3):
        p = random_problem(10, 20, 300 + seed)
        small = [()] + [k.support for k in path(decompose(p), 1e-8, 5)]
        assert small == plasso_supports(p, 5).supports
