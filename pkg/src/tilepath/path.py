"""Lasso path machinery at a fixed ``beta``.

All quantities are evaluated in the rotated frame of :class:`BetaTransform`
(see :mod:`tilepath.problem`), which preserves every inner product used here.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from tilepath.problem import BetaTransform

log = logging.getLogger(__name__)

__all__ = [
    "CholeskyFactor",
    "PathError",
    "PathKnot",
    "SingularGramError",
    "candidate_alpha",
    "candidates",
    "kkt_check",
    "next_knot",
    "path",
    "solve_on_support",
]

TIE_RTOL = 1e-10
EXCLUDE_RTOL = 1e-12
COND_MAX = 1e12


class SingularGramError(np.linalg.LinAlgError):
    def __init__(self, msg: str, cond: float):
        super().__init__(msg)
        self.cond = cond


class PathError(RuntimeError):
    pass


@dataclass
class PathKnot:
    alpha: float
    support: tuple[int, ...]
    signs: tuple[int, ...]
    index: int
    direction: str  # "entered" or "left"
    ties: tuple[int, ...] = ()


@dataclass
class OnSupport:
    """Solves on a fixed support at one ``beta``.

    ``coef`` is the least-squares fit of ``z`` on ``W_I`` and ``shrink`` is
    ``(W_I^T W_I)^{-1} sigma``, so the on-support Lasso solution is
    ``coef - alpha * shrink``.
    """

    support: tuple[int, ...]
    coef: np.ndarray
    shrink: np.ndarray
    corr: np.ndarray  # W^T (z - W_I coef), all n columns
    drift: np.ndarray  # W^T W_I shrink, all n columns


def _gram_factor(G: np.ndarray):
    try:
        fac = cho_factor(G, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        cond = float(np.linalg.cond(G))
        raise SingularGramError(f"Gram matrix is singular (cond ~ {cond:.3g})", cond) from None
    diag = np.abs(np.diag(fac[0]))
    if diag.min() <= 0 or (diag.max() / diag.min()) ** 2 > COND_MAX:
        cond = float(np.linalg.cond(G))
        if not cond < COND_MAX:
            raise SingularGramError(f"Gram matrix is ill-conditioned (cond ~ {cond:.3g})", cond)
    return fac


def on_support(bt: BetaTransform, beta: float, support, signs) -> OnSupport:
    W, z = bt.rotated(beta)
    support = tuple(support)
    if not support:
        zero = np.zeros(0)
        return OnSupport((), zero, zero, W.T @ z, np.zeros(bt.n))
    WI = W[:, list(support)]
    fac = _gram_factor(WI.T @ WI)
    coef = cho_solve(fac, WI.T @ z, check_finite=False)
    shrink = cho_solve(fac, np.asarray(signs, dtype=float), check_finite=False)
    corr = W.T @ (z - WI @ coef)
    drift = W.T @ (WI @ shrink)
    return OnSupport(support, coef, shrink, corr, drift)


def candidates(
    bt: BetaTransform,
    beta: float,
    support,
    signs,
    prev_left: int | None = None,
    variant: str = "lasso",
    state: OnSupport | None = None,
    exclude: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Knot candidates for every index at once.

    For ``j`` outside the support the candidate is the ``alpha`` at which
    ``|B_j^T (y_beta - B u)|`` reaches ``alpha`` with sign ``gamma``; for
    ``j`` inside it is where ``u_j`` crosses zero.  Invalid candidates
    (zero denominator, non-positive value) are ``-inf``.  ``gamma`` is
    ``sign`` of the residual correlation, flipped for ``prev_left``.
    ``exclude`` names an index that has just entered the support; its zero
    crossing coincides with the current knot and is dropped.

    Returns
    -------
    values : ndarray, shape (n,)
    gammas : ndarray of int, shape (n,)
        Meaningful only outside the support.
    """
    st = state if state is not None else on_support(bt, beta, support, signs)
    c, a = st.corr, st.drift
    gam = np.where(c >= 0, 1, -1)
    if prev_left is not None:
        gam[prev_left] = -gam[prev_left]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = c / (gam - a)
    idx = list(st.support)
    if idx:
        if variant == "lars":
            vals[idx] = -np.inf
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                vals[idx] = st.coef / st.shrink
    bad = ~np.isfinite(vals) | (vals <= 0)
    vals[bad] = -np.inf
    if exclude is not None:
        vals[exclude] = -np.inf
    return vals, gam


def candidate_alpha(bt, beta, support, signs, j: int, prev_left: bool = False) -> tuple[float, int]:
    """Single-index form of :func:`candidates`."""
    vals, gam = candidates(bt, beta, support, signs, prev_left=j if prev_left else None)
    return float(vals[j]), int(gam[j])


def argmax_candidates(vals: np.ndarray, alpha_current: float):
    """Largest candidate strictly below ``alpha_current`` and every index tied with it."""
    ok = np.isfinite(vals) & (vals < alpha_current * (1.0 - EXCLUDE_RTOL))
    if not ok.any():
        return None, ()
    masked = np.where(ok, vals, -np.inf)
    best = float(masked.max())
    tied = np.flatnonzero(masked >= best * (1.0 - TIE_RTOL))
    return best, tuple(int(t) for t in tied)


def next_knot(bt, beta, support, signs, alpha_current, prev_left=None, variant="lasso"):
    """Next knot below ``alpha_current``.

    Returns ``(alpha_next, movers, gammas)`` or ``(None, (), {})`` when no
    candidate lies below ``alpha_current`` and the path ends.
    """
    vals, gam = candidates(bt, beta, support, signs, prev_left=prev_left, variant=variant)
    best, movers = argmax_candidates(vals, alpha_current)
    if best is None:
        return None, (), {}
    return best, movers, {j: int(gam[j]) for j in movers if j not in support}


class CholeskyFactor:
    """Lower Cholesky factor of a Gram matrix grown and shrunk one column at a time."""

    def __init__(self):
        self.L = np.zeros((0, 0))

    def append(self, cross: np.ndarray, diag: float) -> None:
        """Add a column with inner products ``cross`` against the current columns."""
        k = self.L.shape[0]
        if k:
            w = solve_triangular(self.L, cross, lower=True, check_finite=False)
            r2 = diag - w @ w
        else:
            w = np.zeros(0)
            r2 = diag
        if not r2 > diag * 1e-14:
            raise SingularGramError("appended column is linearly dependent", math.inf)
        L = np.zeros((k + 1, k + 1))
        L[:k, :k] = self.L
        L[k, :k] = w
        L[k, k] = math.sqrt(r2)
        self.L = L

    def delete(self, pos: int) -> None:
        """Remove column ``pos`` and restore triangularity with Givens rotations."""
        L = np.delete(self.L, pos, axis=0)
        k = L.shape[0]
        for i in range(pos, k):
            a, b = L[i, i], L[i, i + 1]
            r = math.hypot(a, b)
            c, s = a / r, b / r
            col_i, col_j = L[i:, i].copy(), L[i:, i + 1].copy()
            L[i:, i] = c * col_i + s * col_j
            L[i:, i + 1] = -s * col_i + c * col_j
        self.L = np.ascontiguousarray(L[:, :k])

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        t = solve_triangular(self.L, rhs, lower=True, check_finite=False)
        return solve_triangular(self.L.T, t, lower=False, check_finite=False)


def path(bt: BetaTransform, beta: float, s_max: int, variant: str = "lasso", max_knots=None):
    """Knots of the Lasso path at fixed ``beta`` from ``alpha = inf`` downwards.

    The path stops at the first knot whose support has ``s_max`` entries, or
    before a knot that would exceed ``s_max``.  Under ``variant="lars"``
    indices never leave the support.
    """
    if variant not in ("lasso", "lars"):
        raise ValueError(f"unknown variant {variant!r}")
    if s_max < 0 or s_max > bt.m:
        raise ValueError(f"s_max must lie in [0, m={bt.m}], got {s_max}")
    knots: list[PathKnot] = []
    if s_max == 0:
        return knots
    cap = max_knots if max_knots is not None else 50 * s_max
    W, z = bt.rotated(beta)
    support: list[int] = []
    signs: list[int] = []
    chol = CholeskyFactor()
    alpha = math.inf
    prev_left = None
    entered = None
    while True:
        if len(knots) >= cap:
            raise PathError(f"path at beta={beta!r} exceeded {cap} knots")
        if support:
            WI = W[:, support]
            coef = chol.solve(WI.T @ z)
            shrink = chol.solve(np.asarray(signs, dtype=float))
            st = OnSupport(tuple(support), coef, shrink, W.T @ (z - WI @ coef), W.T @ (WI @ shrink))
        else:
            st = None
        vals, gam = candidates(bt, beta, support, signs, prev_left, variant, state=st, exclude=entered)
        best, movers = argmax_candidates(vals, alpha)
        if best is None:
            break
        if len(movers) > 1:
            log.info("tie at beta=%g alpha=%g between %s", beta, best, movers)
        j = min(movers)
        if j in support:
            pos = support.index(j)
            new_support = support[:pos] + support[pos + 1:]
            if len(new_support) > s_max:
                break
            support.pop(pos)
            signs.pop(pos)
            chol.delete(pos)
            prev_left, entered = j, None
            direction = "left"
        else:
            if len(support) + 1 > s_max:
                break
            wj = W[:, j]
            chol.append(W[:, support].T @ wj if support else np.zeros(0), float(wj @ wj))
            support.append(j)
            signs.append(int(gam[j]))
            prev_left, entered = None, j
            direction = "entered"
        alpha = best
        order = np.argsort(support)
        knots.append(
            PathKnot(
                alpha=best,
                support=tuple(support[k] for k in order),
                signs=tuple(signs[k] for k in order),
                index=j,
                direction=direction,
                ties=movers if len(movers) > 1 else (),
            )
        )
        if len(support) >= s_max:
            break
    return knots


def solve_on_support(bt: BetaTransform, beta: float, support, signs, alpha: float) -> np.ndarray:
    """Closed-form Lasso solution on a fixed support and sign pattern."""
    st = on_support(bt, beta, support, signs)
    return st.coef - alpha * st.shrink


def full_vector(n: int, support, values) -> np.ndarray:
    u = np.zeros(n)
    if len(support):
        u[list(support)] = values
    return u


def kkt_check(bt: BetaTransform, beta: float, alpha: float, u: np.ndarray) -> float:
    """Largest violation of the Lasso optimality conditions at ``u``."""
    W, z = bt.rotated(beta)
    u = np.asarray(u, dtype=float)
    g = W.T @ (z - W @ u)
    active = u != 0
    viol = np.where(active, np.abs(g - alpha * np.sign(u)), np.maximum(0.0, np.abs(g) - alpha))
    return float(viol.max()) if viol.size else 0.0
