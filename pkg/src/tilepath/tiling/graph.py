"""Tiles, edges and boundary evaluation for the support tiling."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from tilepath.problem import BetaTransform

ABUT_RTOL = 1e-9


def abut(a: float, b: float, rtol: float = ABUT_RTOL) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b))


@dataclass
class BoundarySegment:
    """Piece of a lower boundary ``alpha^-`` of a source tile.

    On ``(lo, hi)`` the boundary is the knot candidate of ``index`` computed
    from the source support and signs: the entry value with sign ``gamma``
    when ``entering``, otherwise the zero crossing of ``u_index``.  An
    ``index`` of None marks a stretch without any knot, where the tile
    reaches down to ``alpha = 0``.
    """

    lo: float
    hi: float
    index: int | None
    gamma: int
    support: tuple[int, ...]
    signs: tuple[int, ...]

    @property
    def entering(self) -> bool:
        return self.index is not None and self.index not in self.support

    def same_formula(self, other: "BoundarySegment") -> bool:
        return (
            self.index == other.index
            and self.gamma == other.gamma
            and self.support == other.support
            and self.signs == other.signs
        )

    def value(self, bt: BetaTransform, beta: float) -> float:
        return segment_value(bt, beta, self)


def segment_value(bt: BetaTransform, beta: float, seg: BoundarySegment) -> float:
    """Evaluate a boundary segment at ``beta`` using only the columns it needs."""
    if seg.index is None:
        return 0.0
    W, z = bt.rotated(beta)
    I = list(seg.support)
    j = seg.index
    if not I:
        return float(W[:, j] @ z) / seg.gamma
    WI = W[:, I]
    fac = cho_factor(WI.T @ WI, lower=True, check_finite=False)
    coef = cho_solve(fac, WI.T @ z, check_finite=False)
    shrink = cho_solve(fac, np.asarray(seg.signs, dtype=float), check_finite=False)
    if seg.entering:
        wj = W[:, j]
        c = wj @ (z - WI @ coef)
        a = wj @ (WI @ shrink)
        return float(c / (seg.gamma - a))
    k = I.index(j)
    return float(coef[k] / shrink[k])


@dataclass(eq=False)
class Edge:
    """Shared boundary between ``source`` (above) and ``target`` (below) on ``(lo, hi)``."""

    source: int
    target: int
    lo: float
    hi: float
    segment: BoundarySegment


@dataclass(eq=False)
class Tile:
    id: int
    support: tuple[int, ...]
    signs: tuple[int, ...]
    beta_minus: float
    beta_plus: float
    parent_edges: list[Edge] = field(default_factory=list)
    child_edges: list[Edge] = field(default_factory=list)
    floor: list[BoundarySegment] = field(default_factory=list)
    uncovered: list[tuple[float, float]] = field(default_factory=list)
    completed: bool = False
    version: int = 0

    @property
    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.support, self.signs

    @property
    def size(self) -> int:
        return len(self.support)

    @property
    def boundary_segments(self) -> list[BoundarySegment]:
        segs = [e.segment for e in self.child_edges] + list(self.floor)
        return sorted(segs, key=lambda s: s.lo)

    def parent_edge_at(self, beta: float) -> Edge | None:
        return _edge_at(self.parent_edges, beta)

    def child_edge_at(self, beta: float) -> Edge | None:
        return _edge_at(self.child_edges, beta)

    def segment_at(self, beta: float) -> BoundarySegment | None:
        segs = self.boundary_segments
        for i, s in enumerate(segs):
            last = i == len(segs) - 1
            if s.lo <= beta < s.hi or (last and beta == s.hi):
                return s
        return None

    def sort_edges(self) -> None:
        self.parent_edges.sort(key=lambda e: e.lo)
        self.child_edges.sort(key=lambda e: e.lo)
        self.floor.sort(key=lambda s: s.lo)


def _edge_at(edges: list[Edge], beta: float) -> Edge | None:
    """Edge whose half-open interval ``[lo, hi)`` holds ``beta``; the last edge also owns its ``hi``."""
    if not edges:
        return None
    los = [e.lo for e in edges]
    k = bisect.bisect_right(los, beta) - 1
    if k < 0:
        return None
    e = edges[k]
    if beta < e.hi or (beta == e.hi and k == len(edges) - 1):
        return e
    return None


@dataclass(eq=False)
class TilingGraph:
    """Rooted, ordered multigraph of tiles covering ``beta_range x (0, inf)``."""

    bt: BetaTransform
    beta_range: tuple[float, float]
    s_max: int
    variant: str = "lasso"
    tiles: dict[int, Tile] = field(default_factory=dict)
    root: int = 0
    ties: list[tuple[int, float, tuple[int, ...]]] = field(default_factory=list)
    _next_id: int = 0

    def new_tile(self, support, signs, lo, hi) -> Tile:
        t = Tile(self._next_id, tuple(support), tuple(signs), lo, hi, uncovered=[(lo, hi)])
        self.tiles[t.id] = t
        self._next_id += 1
        return t

    def alpha_upper(self, tile: Tile, beta: float) -> float:
        if tile.id == self.root:
            return math.inf
        e = tile.parent_edge_at(beta)
        if e is None:
            raise ValueError(f"beta={beta} outside the parent edges of tile {tile.id}")
        return segment_value(self.bt, beta, e.segment)

    def alpha_lower(self, tile: Tile, beta: float) -> float | None:
        """Stored lower boundary at ``beta``; None where it is not computed yet."""
        s = tile.segment_at(beta)
        if s is None:
            return None
        return segment_value(self.bt, beta, s)

    def edges(self) -> list[Edge]:
        out = []
        for t in self.tiles.values():
            out.extend(t.child_edges)
        return sorted(out, key=lambda e: (e.source, e.lo))

    def supports(self, size: int | None = None) -> set[tuple[tuple[int, ...], tuple[int, ...]]]:
        return {t.key for t in self.tiles.values() if size is None or t.size == size}

    def summary(self) -> dict:
        sizes: dict[int, set] = {}
        for t in self.tiles.values():
            sizes.setdefault(t.size, set()).add(t.support)
        return {
            "tiles": len(self.tiles),
            "edges": len(self.edges()),
            "supports_per_size": {k: len(v) for k, v in sorted(sizes.items())},
        }
