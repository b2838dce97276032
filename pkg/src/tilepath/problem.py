"""Unmixing problem instances and the beta-reduction to a single-penalty Lasso.

For fixed ``beta`` the functional

    ||A(u + v) - y||^2 + alpha ||u||_1 + beta ||v||^2

is minimised over ``v`` in closed form, which leaves a Lasso in ``u`` with
matrix ``B_beta = (I + AA^T/beta)^{-1/2} A`` and datum
``y_beta = (I + AA^T/beta)^{-1/2} y``.  With ``AA^T = U diag(d) U^T`` both are
cheap to form for any ``beta`` once the eigendecomposition is known.

Internally the Lasso quantities are evaluated in the rotated frame
``W = diag(f) U^T A``, ``z = diag(f) U^T y`` with ``f = (1 + d/beta)^{-1/2}``.
Since ``B_beta = U W`` and ``U`` is orthogonal, every inner product between
columns of ``B_beta`` and ``y_beta`` equals the corresponding one for ``W``
and ``z``; forming ``W`` costs ``O(mn)`` instead of ``O(m^2 n)``.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BetaTransform",
    "DomainError",
    "Problem",
    "RegularizedSolution",
    "decompose",
]

EIG_CLAMP = 1e-12


class DomainError(ValueError):
    """Raised for a non-positive ``beta``."""


@dataclass
class Problem:
    """Unmixing instance ``A (u + v) + delta = y``.

    Parameters
    ----------
    A : ndarray, shape (m, n)
        Measurement matrix.
    y : ndarray, shape (m,)
        Datum.
    u_true, v_true : ndarray, shape (n,), optional
        Sparse signal and signal noise, when known.
    delta : ndarray, shape (m,), optional
        Measurement noise, when known.
    """

    A: np.ndarray
    y: np.ndarray
    u_true: np.ndarray | None = None
    v_true: np.ndarray | None = None
    delta: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        m, n = self.A.shape
        if m < 1 or n < 1:
            raise ValueError(f"A must be non-empty, got shape {self.A.shape}")
        if self.y.shape[0] != m:
            raise ValueError(f"y has length {self.y.shape[0]}, expected {m}")
        truth = (self.u_true, self.v_true, self.delta)
        if any(t is not None for t in truth):
            if any(t is None for t in truth):
                raise ValueError("ground truth needs u_true, v_true and delta together")
            self.u_true = np.asarray(self.u_true, dtype=float).reshape(-1)
            self.v_true = np.asarray(self.v_true, dtype=float).reshape(-1)
            self.delta = np.asarray(self.delta, dtype=float).reshape(-1)
            if self.u_true.shape[0] != n or self.v_true.shape[0] != n:
                raise ValueError("u_true and v_true must have length n")
            if self.delta.shape[0] != m:
                raise ValueError("delta must have length m")
            recon = self.A @ (self.u_true + self.v_true) + self.delta
            scale = max(np.linalg.norm(self.y), np.finfo(float).tiny)
            if np.linalg.norm(recon - self.y) > 1e-12 * scale:
                raise ValueError("ground truth does not reproduce y")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def has_truth(self) -> bool:
        return self.u_true is not None

    @property
    def true_support(self) -> tuple[int, ...]:
        if self.u_true is None:
            raise ValueError("problem has no ground truth")
        return tuple(int(i) for i in np.flatnonzero(self.u_true))


@dataclass
class RegularizedSolution:
    """Minimiser ``(u, v)`` of the multi-penalty functional at ``(beta, alpha)``."""

    beta: float
    alpha: float
    u: np.ndarray
    v: np.ndarray

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.u))


@dataclass(eq=False)
class BetaTransform:
    """Cached eigendecomposition of ``A A^T``.

    Immutable after construction apart from the internal cache of rotated
    matrices, which is guarded by a lock.
    """

    A: np.ndarray
    y: np.ndarray
    U: np.ndarray
    d: np.ndarray
    cache_size: int = 64
    _C: np.ndarray = field(init=False, repr=False)
    _yr: np.ndarray = field(init=False, repr=False)
    _cache: OrderedDict = field(init=False, repr=False)
    _lock: threading.Lock = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._C = self.U.T @ self.A
        self._yr = self.U.T @ self.y
        self._cache = OrderedDict()
        self._lock = threading.Lock()

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def factor(self, beta: float) -> np.ndarray:
        """Eigenvalues of ``(I + AA^T/beta)^{-1/2}``."""
        beta = _check_beta(beta)
        if math.isinf(beta):
            return np.ones_like(self.d)
        return 1.0 / np.sqrt(1.0 + self.d / beta)

    def rotated(self, beta: float) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(W, z)`` with ``B_beta = U W`` and ``y_beta = U z``."""
        beta = float(beta)
        with self._lock:
            hit = self._cache.get(beta)
            if hit is not None:
                self._cache.move_to_end(beta)
                return hit
        f = self.factor(beta)
        W = f[:, None] * self._C
        z = f * self._yr
        W.setflags(write=False)
        z.setflags(write=False)
        with self._lock:
            self._cache[beta] = (W, z)
            if len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return W, z

    def columns_B(self, beta: float, I=None) -> np.ndarray:
        """``B_beta`` restricted to the columns ``I`` (all columns if None)."""
        W, _ = self.rotated(beta)
        if I is None:
            return self.U @ W
        return self.U @ W[:, list(I)]

    def transformed_y(self, beta: float) -> np.ndarray:
        _, z = self.rotated(beta)
        return self.U @ z

    def recover_v(self, beta: float, u: np.ndarray) -> np.ndarray:
        """Noise component ``(beta + A^T A)^{-1} (A^T y - A^T A u)``.

        Uses ``(beta + A^T A)^{-1} A^T = A^T (beta + A A^T)^{-1}`` so only the
        ``m x m`` spectrum is touched.
        """
        beta = _check_beta(beta)
        if math.isinf(beta):
            return np.zeros(self.n)
        r = self.y - self.A @ np.asarray(u, dtype=float)
        return self.A.T @ (self.U @ ((self.U.T @ r) / (beta + self.d)))


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    return beta


def decompose(problem: Problem, cache_size: int = 64) -> BetaTransform:
    """Eigendecompose ``A A^T`` for ``problem``.

    Eigenvalues below ``1e-12 * max(d)`` (including negative round-off) are
    clamped to zero.
    """
    A, y = problem.A, problem.y
    bad = np.argwhere(~np.isfinite(A))
    if bad.size:
        i, j = bad[0]
        raise ValueError(f"A has a non-finite entry at ({i}, {j})")
    bad = np.flatnonzero(~np.isfinite(y))
    if bad.size:
        raise ValueError(f"y has a non-finite entry at {bad[0]}")
    d, U = np.linalg.eigh(A @ A.T)
    dmax = max(float(d.max()), 0.0)
    d = np.where(d < EIG_CLAMP * dmax, 0.0, d)
    return BetaTransform(A=A, y=y, U=U, d=d, cache_size=cache_size)
