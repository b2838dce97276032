"""Scalar root finding: bisection and an interval-guarded secant method."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

MAX_ITER = 200
DEFAULT_TOL = 1e-9


class RootFindError(RuntimeError):
    pass


@dataclass
class BracketedProblem:
    f: Callable[[float], float]
    lo: float
    hi: float
    tol_rel: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        flo, fhi = _eval(self.f, self.lo), _eval(self.f, self.hi)
        if flo * fhi >= 0:
            raise ValueError(f"f has no sign change on [{self.lo}, {self.hi}]: {flo}, {fhi}")
        self.flo, self.fhi = flo, fhi


def _eval(f, x: float) -> float:
    fx = float(f(x))
    if not math.isfinite(fx):
        raise RootFindError(f"non-finite function value {fx} at x={x}")
    return fx


def _converged(lo: float, hi: float, tol: float) -> bool:
    mid = 0.5 * (lo + hi)
    return hi - lo <= tol * max(1.0, abs(mid))


def bisect(p: BracketedProblem) -> float:
    """Bisect until the bracket is narrower than ``tol_rel * max(1, |root|)``."""
    lo, hi, flo = p.lo, p.hi, p.flo
    for _ in range(MAX_ITER):
        if _converged(lo, hi, p.tol_rel):
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        fm = _eval(p.f, mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise RootFindError(f"bisection did not converge on [{p.lo}, {p.hi}]")


def guarded_secant(f, lo: float, hi: float, tol_rel: float = DEFAULT_TOL, log=None) -> float:
    """Secant iteration kept inside a shrinking bracket.

    If ``f`` changes sign on ``[lo, hi]`` the bracket is maintained and any
    secant step that leaves it is replaced by the bracket midpoint, so
    convergence is guaranteed.  Without a sign change the plain secant method
    is used, with out-of-interval steps replaced by the midpoint of the
    current interval.  ``log``, if given, receives every iterate.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    a, b = float(lo), float(hi)
    fa, fb = _eval(f, a), _eval(f, b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    bracketed = fa * fb < 0
    x0, f0, x1, f1 = a, fa, b, fb
    for _ in range(MAX_ITER):
        if f1 != f0:
            x = x1 - f1 * (x1 - x0) / (f1 - f0)
        else:
            x = 0.5 * (a + b)
        if not (a < x < b) or not math.isfinite(x):
            x = 0.5 * (a + b)
        fx = _eval(f, x)
        if log is not None:
            log.append(x)
        if fx == 0.0:
            return x
        if bracketed:
            if (fx < 0) == (fa < 0):
                a, fa = x, fx
            else:
                b, fb = x, fx
            if _converged(a, b, tol_rel):
                return x
        # one bracket end can stay fixed under secant steps, so also stop on step size
        if abs(x - x1) <= 0.5 * tol_rel * max(1.0, abs(x)):
            return x
        x0, f0, x1, f1 = x1, f1, x, fx
    raise RootFindError(f"secant iteration did not converge on [{lo}, {hi}]")
