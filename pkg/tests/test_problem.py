import numpy as np
import pytest

from tilepath.io import read_matrix, read_vector, write_matrix
from tilepath.problem import DomainError, Problem, decompose

from conftest import random_problem


def test_decompose_scalar_and_identity():
    bt = decompose(Problem(np.array([[1.0]]), np.array([1.0])))
    np.testing.assert_allclose(np.abs(bt.U), [[1.0]])
    np.testing.assert_allclose(bt.d, [1.0])
    bt = decompose(Problem(np.eye(2), np.ones(2)))
    np.testing.assert_allclose(bt.d, [1.0, 1.0])


def test_decompose_reconstructs_gram():
    p = random_problem(4, 6, 0)
    bt = decompose(p)
    G = p.A @ p.A.T
    err = np.linalg.norm(bt.U @ np.diag(bt.d) @ bt.U.T - G) / np.linalg.norm(G)
    assert err <= 1e-10
    assert np.all(bt.d >= 0)


def test_decompose_rejects_non_finite():
    A = np.eye(3)
    A[1, 2] = np.nan
    with pytest.raises(ValueError, match=r"\(1, 2\)"):
        decompose(Problem(A, np.ones(3)))


def test_problem_truth_must_reproduce_y():
    A = np.eye(2)
    u, v, d = np.array([1.0, 0]), np.array([0.1, 0.1]), np.zeros(2)
    Problem(A, A @ (u + v) + d, u, v, d)
    with pytest.raises(ValueError):
        Problem(A, np.zeros(2), u, v, d)
    with pytest.raises(ValueError):
        Problem(A, np.zeros(3))


def test_columns_B_closed_forms():
    bt = decompose(Problem(np.array([[1.0]]), np.array([2.0])))
    np.testing.assert_allclose(bt.columns_B(1.0), [[1 / np.sqrt(2)]], rtol=1e-14)
    np.testing.assert_allclose(bt.transformed_y(1.0), [np.sqrt(2)], rtol=1e-14)
    bt2 = decompose(Problem(np.eye(2), np.array([1.0, 0.5])))
    np.testing.assert_allclose(bt2.columns_B(3.0), np.sqrt(3 / 4) * np.eye(2), atol=1e-14)
    np.testing.assert_allclose(bt2.transformed_y(1.0), np.array([1.0, 0.5]) / np.sqrt(2), atol=1e-14)
    np.testing.assert_allclose(bt2.columns_B(3.0, [1]), [[0.0], [np.sqrt(3 / 4)]], atol=1e-14)


def test_large_beta_limit():
    p = random_problem(5, 8, 1)
    bt = decompose(p)
    np.testing.assert_allclose(bt.columns_B(1e12), p.A, rtol=1e-5, atol=1e-10)
    np.testing.assert_allclose(bt.transformed_y(1e12), p.y, rtol=1e-5, atol=1e-10)


def test_domain_error():
    bt = decompose(random_problem(3, 4, 2))
    for beta in (0.0, -1.0):
        with pytest.raises(DomainError):
            bt.columns_B(beta)
        with pytest.raises(DomainError):
            bt.recover_v(beta, np.zeros(4))


def test_operator_squares_to_inverse():
    p = random_problem(5, 9, 3)
    bt = decompose(p)
    beta = 0.7
    M = bt.U @ np.diag(bt.factor(beta)) @ bt.U.T
    x = np.random.default_rng(0).standard_normal(5)
    lhs = M @ (M @ x)
    rhs = np.linalg.solve(np.eye(5) + p.A @ p.A.T / beta, x)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_small_beta_limit_matches_preconditioner():
    from tilepath.decoders import preconditioner

    p = random_problem(5, 9, 4)
    bt = decompose(p)
    beta = 1e-10
    # (beta I + AA^T)^{-1/2} A = B_beta / sqrt(beta)
    np.testing.assert_allclose(bt.columns_B(beta) / np.sqrt(beta), preconditioner(p.A) @ p.A, atol=1e-6)


def test_recover_v():
    bt = decompose(Problem(np.array([[1.0]]), np.array([2.0])))
    np.testing.assert_allclose(bt.recover_v(1.0, np.zeros(1)), [1.0])
    p = random_problem(4, 7, 5)
    bt = decompose(p)
    u = np.random.default_rng(1).standard_normal(7)
    beta = 0.3
    A, y = p.A, p.y
    dense = np.linalg.solve(beta * np.eye(7) + A.T @ A, A.T @ y - A.T @ A @ u)
    v = bt.recover_v(beta, u)
    np.testing.assert_allclose(v, dense, atol=1e-10)
    grad = A.T @ (A @ (u + v) - y) + beta * v
    assert np.abs(grad).max() <= 1e-8 * np.abs(A.T @ y).max()


def test_recover_v_zero_residual():
    A = np.random.default_rng(3).standard_normal((3, 5))
    u = np.array([1.0, 0, 0, 2.0, 0])
    bt = decompose(Problem(A, A @ u))
    np.testing.assert_allclose(bt.recover_v(0.5, u), 0, atol=1e-12)


@pytest.mark.parametrize("fmt", ["csv", "tpth"])
def test_io_round_trip(tmp_path, fmt):
    X = np.random.default_rng(0).standard_normal((3, 4))
    f = tmp_path / f"x.{fmt}"
    write_matrix(f, X, fmt)
    np.testing.assert_array_equal(read_matrix(f), X)
    write_matrix(f, X[0], fmt)
    np.testing.assert_array_equal(read_vector(f), X[0])


def test_tpth_detected_by_magic_and_length_checked(tmp_path):
    f = tmp_path / "a.csv"
    write_matrix(f, np.eye(2), "tpth")
    np.testing.assert_array_equal(read_matrix(f), np.eye(2))
    f.write_bytes(f.read_bytes()[:-3])
    with pytest.raises(ValueError):
        read_matrix(f)
    with pytest.raises(ValueError):
        write_matrix(f, np.eye(2), "npy")


def test_read_vector_rejects_matrix(tmp_path):
    f = tmp_path / "m.csv"
    write_matrix(f, np.ones((2, 2)))
    with pytest.raises(ValueError):
        read_vector(f)
