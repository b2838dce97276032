"""Choosing one support from the many a tiling offers."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from tilepath.decoders import PINV_RTOL
from tilepath.problem import Problem
from tilepath.tiling.graph import TilingGraph

log = logging.getLogger(__name__)


@dataclass
class SupportCandidate:
    support: tuple[int, ...]
    u_hat: np.ndarray
    v_hat: np.ndarray
    score: float


def enumerate_supports(graph: TilingGraph, s: int) -> set[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Distinct ``(support, signs)`` pairs of size ``s`` found anywhere in the tiling."""
    if s > graph.s_max:
        raise ValueError(f"s={s} exceeds the tiling's s_max={graph.s_max}")
    return graph.supports(s)


class Regressor:
    """Least-squares fits on a support, sharing one pseudo-inverse of ``A``."""

    def __init__(self, problem: Problem):
        self.A, self.y = problem.A, problem.y
        self.pinv = np.linalg.pinv(self.A, rcond=PINV_RTOL)

    def __call__(self, support) -> tuple[np.ndarray, np.ndarray]:
        support = list(support)
        if not support:
            return np.zeros(0), self.pinv @ self.y
        AI = self.A[:, support]
        if np.linalg.matrix_rank(AI) < len(support):
            raise np.linalg.LinAlgError(f"A restricted to {tuple(support)} is rank deficient")
        u_hat, *_ = np.linalg.lstsq(AI, self.y, rcond=None)
        v_hat = self.pinv @ (self.y - AI @ u_hat)
        return u_hat, v_hat


def regress(problem: Problem, support) -> tuple[np.ndarray, np.ndarray]:
    """``u_hat`` = least squares on ``A_I``; ``v_hat`` = pseudo-inverse applied to the residual."""
    return Regressor(problem)(support)


def unmixing_score(u_hat: np.ndarray, v_hat: np.ndarray, y: np.ndarray) -> float:
    """Smallest recovered magnitude over the largest noise entry; ``inf`` for zero noise."""
    vmax = float(np.abs(v_hat).max()) if v_hat.size else 0.0
    umin = float(np.abs(u_hat).min()) if u_hat.size else 0.0
    if vmax <= 1e-13 * max(float(np.abs(y).max()), np.finfo(float).tiny):
        return math.inf
    return umin / vmax


def score_candidates(
    problem: Problem,
    candidates: Iterable,
    scorer: Callable[[np.ndarray, np.ndarray, np.ndarray], float] = unmixing_score,
) -> list[SupportCandidate]:
    reg = Regressor(problem)
    out = []
    for sup in candidates:
        sup = tuple(sorted(sup))
        try:
            u_hat, v_hat = reg(sup)
        except np.linalg.LinAlgError as exc:
            log.info("skipping candidate %s: %s", sup, exc)
            continue
        out.append(SupportCandidate(sup, u_hat, v_hat, scorer(u_hat, v_hat, problem.y)))
    return out


def _sd(a, b) -> int:
    return len(set(a) ^ set(b))


def rank_supports(problem: Problem, candidates: Iterable, s: int | None = None, scorer=unmixing_score):
    """Support with the best score among ``candidates``.

    Ties go to the candidate nearest (by symmetric difference) to the
    lexicographically smallest tied one, then lexicographic order.
    """
    cands = {tuple(sorted(c)) for c in candidates}
    if s is not None:
        wrong = [c for c in cands if len(c) != s]
        if wrong:
            raise ValueError(f"candidates of the wrong size: {wrong[:3]}")
    scored = score_candidates(problem, sorted(cands), scorer)
    if not scored:
        raise ValueError("no candidate supports to rank")
    best = max(c.score for c in scored)
    tied = sorted(c.support for c in scored if c.score == best)
    anchor = tied[0]
    return min(tied, key=lambda c: (_sd(c, anchor), c))


def oracle_closest(candidates: Iterable, true_support) -> tuple[int, ...]:
    """Candidate with the smallest symmetric difference to the true support."""
    cands = sorted({tuple(sorted(c)) for c in candidates})
    if not cands:
        raise ValueError("no candidate supports")
    truth = tuple(true_support)
    return min(cands, key=lambda c: (_sd(c, truth), c))
