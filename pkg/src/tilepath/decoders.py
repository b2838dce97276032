"""Baseline sparse decoders: OMP, IHT with a Lasso warm start, Lasso and pLasso paths.

Each decoder receives the true support size ``s`` and returns its candidate
supports in a :class:`DecoderResult`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from tilepath.path import path, solve_on_support
from tilepath.problem import Problem, decompose

LASSO_BETA = 1e12
PINV_RTOL = 1e-10
IHT_MAX_ITER = 500


@dataclass
class DecoderResult:
    method: str
    supports: list[tuple[int, ...]]
    coefficients: list[np.ndarray]
    wall_time: float
    meta: dict = field(default_factory=dict)


def _lstsq(A: np.ndarray, y: np.ndarray, support) -> np.ndarray:
    if not len(support):
        return np.zeros(0)
    AI = A[:, list(support)]
    if np.linalg.matrix_rank(AI) < AI.shape[1]:
        raise np.linalg.LinAlgError(f"columns {tuple(support)} are rank deficient")
    coef, *_ = np.linalg.lstsq(AI, y, rcond=None)
    return coef


def omp(problem: Problem, s: int) -> DecoderResult:
    """Orthogonal matching pursuit with ``s`` greedy steps.

    Columns are compared by normalised correlation with the residual and
    the coefficients are refit by least squares after every selection.
    """
    t0 = time.perf_counter()
    A, y = problem.A, problem.y
    if s > A.shape[0]:
        raise ValueError(f"s={s} exceeds m={A.shape[0]}")
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = np.inf
    support: list[int] = []
    coef = np.zeros(0)
    r = y.copy()
    for _ in range(s):
        corr = np.abs(A.T @ r) / norms
        corr[support] = -np.inf
        support.append(int(np.argmax(corr)))
        coef = _lstsq(A, y, support)
        r = y - A[:, support] @ coef
    order = np.argsort(support)
    sup = tuple(support[k] for k in order)
    return DecoderResult("omp", [sup], [coef[order]], time.perf_counter() - t0)


def lasso_supports(problem: Problem, s_max: int, bt=None) -> DecoderResult:
    """Supports along the standard Lasso path, realised as the path at very large ``beta``."""
    t0 = time.perf_counter()
    bt = decompose(problem) if bt is None else bt
    knots = path(bt, LASSO_BETA, s_max)
    supports = [()] + [k.support for k in knots]
    coefs = [np.zeros(0)] + [
        solve_on_support(bt, LASSO_BETA, k.support, k.signs, k.alpha) for k in knots
    ]
    return DecoderResult(
        "lasso", supports, coefs, time.perf_counter() - t0,
        meta={"knots": [k.alpha for k in knots], "signs": [k.signs for k in knots]},
    )


def preconditioner(A: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """``F = U Sigma^+ U^T`` from the SVD of ``A``, small singular values treated as zero."""
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    inv = np.zeros_like(sv)
    keep = sv > rtol * sv.max() if sv.size and sv.max() > 0 else np.zeros_like(sv, dtype=bool)
    inv[keep] = 1.0 / sv[keep]
    return (U * inv) @ U.T


def plasso_supports(problem: Problem, s_max: int) -> DecoderResult:
    """Supports along the Lasso path of the preconditioned system ``(FA, Fy)``."""
    t0 = time.perf_counter()
    F = preconditioner(problem.A)
    pre = Problem(F @ problem.A, F @ problem.y)
    res = lasso_supports(pre, s_max)
    res.method = "plasso"
    res.wall_time = time.perf_counter() - t0
    return res


def iht_warm(problem: Problem, s: int, bt=None, max_iter: int = IHT_MAX_ITER) -> DecoderResult:
    """Iterative hard thresholding started from a Lasso solution.

    The warm start is the Lasso solution at the largest knot of the standard
    Lasso path whose support reaches ``s`` entries, cut to its ``s`` largest
    magnitudes.  Iterations ``u <- H_s(u + mu A^T (y - A u))`` with
    ``mu = 1/||A||_2^2`` stop once the support is unchanged and the iterate
    has settled, or after ``max_iter`` steps.
    """
    t0 = time.perf_counter()
    A, y = problem.A, problem.y
    n = A.shape[1]
    if s == 0:
        return DecoderResult("l1iht", [()], [np.zeros(0)], time.perf_counter() - t0, {"iterations": 0})
    bt = decompose(problem) if bt is None else bt
    knots = path(bt, LASSO_BETA, s)
    u = np.zeros(n)
    if knots:
        k = knots[-1]
        u[list(k.support)] = solve_on_support(bt, LASSO_BETA, k.support, k.signs, k.alpha)
        # the newest index sits at zero on its knot; keep it in the start support
        if k.direction == "entered" and u[k.index] == 0:
            u[k.index] = k.signs[k.support.index(k.index)] * np.finfo(float).tiny
    u = _hard_threshold(u, s)
    mu = 1.0 / np.linalg.norm(A, 2) ** 2
    sup = _support(u)
    it = 0
    for it in range(1, max_iter + 1):
        u_new = _hard_threshold(u + mu * (A.T @ (y - A @ u)), s)
        sup_new = _support(u_new)
        settled = np.linalg.norm(u_new - u) <= 1e-10 * max(np.linalg.norm(u_new), 1e-300)
        u = u_new
        if sup_new == sup and settled:
            break
        sup = sup_new
    sup = _support(u)
    coef = _lstsq(A, y, sup)
    return DecoderResult(
        "l1iht", [sup], [coef], time.perf_counter() - t0,
        meta={"iterations": it, "step": mu, "max_iter": max_iter},
    )


def _hard_threshold(u: np.ndarray, s: int) -> np.ndarray:
    out = np.zeros_like(u)
    if s <= 0:
        return out
    keep = np.argsort(-np.abs(u), kind="stable")[:s]
    out[keep] = u[keep]
    return out


def _support(u: np.ndarray) -> tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(u))


DECODERS = {
    "omp": omp,
    "l1iht": iht_warm,
    "lasso": lasso_supports,
    "plasso": plasso_supports,
}
