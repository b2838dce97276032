"""Construction of the support tiling.

Tiles are completed one at a time.  Completing a tile means computing its
lower boundary on the parts of its beta-range where it is still unknown,
creating a child for every maximal stretch on which one index enters or
leaves the support, and then merging those children with tiles that were
discovered from neighbouring parents.

All searches in ``beta`` run on ``t = log(beta)`` since tilings routinely span
eight or more decades.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from tilepath import rootfind
from tilepath.path import SingularGramError, argmax_candidates, candidates
from tilepath.problem import BetaTransform
from tilepath.tiling.graph import (
    BoundarySegment,
    Edge,
    Tile,
    TilingGraph,
    abut,
    segment_value,
)

log = logging.getLogger(__name__)

MAX_TILES = 100_000
MAX_DEPTH = 64
EPS_FRAC = 1e-6
BETA_TOL = 1e-9


class TilingError(RuntimeError):
    pass


@dataclass
class Context:
    """What a tile needs from the parent edge above it to evaluate its candidates."""

    segment: BoundarySegment | None  # None for the root

    @property
    def prev_left(self) -> int | None:
        s = self.segment
        if s is None or s.index is None or s.entering:
            return None
        return s.index

    @property
    def exclude(self) -> int | None:
        s = self.segment
        if s is not None and s.entering:
            return s.index
        return None

    def alpha_upper(self, bt: BetaTransform, beta: float) -> float:
        if self.segment is None:
            return math.inf
        return segment_value(bt, beta, self.segment)


@dataclass
class Piece:
    """Preliminary child: a stretch ``(lo, hi)`` with one mover, or a floor when ``index`` is None."""

    lo: float
    hi: float
    index: int | None
    gamma: int
    context: Context

    def label(self):
        return (self.index, self.gamma)


def child_key(tile: Tile, index: int, gamma: int):
    support, signs = list(tile.support), list(tile.signs)
    if index in support:
        k = support.index(index)
        del support[k], signs[k]
    else:
        support.append(index)
        signs.append(gamma)
    order = np.argsort(support)
    return tuple(int(support[k]) for k in order), tuple(int(signs[k]) for k in order)


def _label_at(graph: TilingGraph, tile: Tile, ctx: Context, beta: float):
    """Arg-max of the knot candidates below ``alpha^+`` at ``beta``.

    Returns ``(label, values)`` where ``label`` is ``(index, gamma)`` or
    ``(None, 0)`` when no knot lies below the upper boundary, and ``values``
    holds the admissible candidates (``-inf`` elsewhere).
    """
    bt = graph.bt
    vals, gam = candidates(
        bt, beta, tile.support, tile.signs, prev_left=ctx.prev_left,
        variant=graph.variant, exclude=ctx.exclude,
    )
    upper = ctx.alpha_upper(bt, beta)
    best, movers = argmax_candidates(vals, upper)
    if best is None:
        return (None, 0), None, ()
    admissible = np.where(vals < upper * (1 - 1e-12), vals, -np.inf)
    j = movers[0]
    g = int(gam[j]) if j not in tile.support else 0
    return (j, g), admissible, movers


def _label(graph, tile, ctx, t_lo, t_hi, at_left: bool):
    """Label just inside ``t_lo`` (``at_left``) or ``t_hi``, shrinking the offset on ties."""
    width = t_hi - t_lo
    eps = EPS_FRAC * width
    for _ in range(3):
        t = t_lo + eps if at_left else t_hi - eps
        lab, vals, movers = _label_at(graph, tile, ctx, math.exp(t))
        if len(movers) <= 1:
            return lab, vals
        eps *= 0.1
    graph.ties.append((tile.id, math.exp(t), movers))
    log.info("persistent tie in tile %d at beta=%g between %s", tile.id, math.exp(t), movers)
    return lab, vals


def _second_largest(vals, j) -> bool:
    """Whether ``vals[j]`` is the second largest admissible candidate."""
    if vals is None or not np.isfinite(vals[j]):
        return False
    order = np.argsort(vals)[::-1]
    return len(order) > 1 and order[1] == j


def crossing_function(graph, tile, ctx, i: int, j: int):
    """``t -> log(alpha_i) - log(alpha_j)`` at ``beta = exp(t)``."""
    bt = graph.bt

    def f(t):
        vals, _ = candidates(
            bt, math.exp(t), tile.support, tile.signs, prev_left=ctx.prev_left,
            variant=graph.variant, exclude=ctx.exclude,
        )
        return math.log(vals[i]) - math.log(vals[j]) if vals[i] > 0 and vals[j] > 0 else math.nan

    return f


def crossing(graph: TilingGraph, tile: Tile, i: int, j: int, interval, ctx: Context | None = None):
    """Smallest ``beta`` in ``interval`` where the candidates of ``i`` and ``j`` agree.

    Returns None when their difference has the same sign at both ends.
    """
    if ctx is None:
        ctx = Context(None) if tile.id == graph.root else Context(tile.parent_edge_at(interval[0]).segment)
    f = crossing_function(graph, tile, ctx, i, j)
    t_lo, t_hi = math.log(interval[0]), math.log(interval[1])
    try:
        f_lo, f_hi = f(t_lo), f(t_hi)
    except (ValueError, OverflowError):
        return None
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or f_lo * f_hi > 0:
        return None
    if f_lo == 0:
        return interval[0]
    t = rootfind.guarded_secant(f, t_lo, t_hi, tol_rel=BETA_TOL)
    return math.exp(t)


def find_children(graph: TilingGraph, tile: Tile, subinterval, ctx: Context) -> list[Piece]:
    """Left-to-right preliminary children of ``tile`` on ``subinterval``.

    The interval is split by divide and conquer until the arg-max index is
    the same at both ends of every piece.  Bisection is in ``log(beta)``; when
    the two end indices are each other's runner-up, the split point is their
    crossing, found by a guarded secant iteration.
    """
    lo, hi = subinterval
    t_lo, t_hi = math.log(lo), math.log(hi)
    out: list[tuple[float, float, tuple]] = []
    left, vl = _label(graph, tile, ctx, t_lo, t_hi, True)
    right, vr = _label(graph, tile, ctx, t_lo, t_hi, False)
    stack = [(t_lo, t_hi, left, vl, right, vr, 0)]
    while stack:
        a, b, la, va, lb, vb, depth = stack.pop()
        if la == lb:
            out.append((a, b, la))
            continue
        if depth > MAX_DEPTH:
            raise TilingError(
                f"tile {tile.id}: envelope search exceeded depth {MAX_DEPTH} on "
                f"beta in ({math.exp(a):.6g}, {math.exp(b):.6g})"
            )
        ja, jb = la[0], lb[0]
        both = ja is not None and jb is not None
        tm = None
        narrow = b - a <= BETA_TOL * max(1.0, abs(0.5 * (a + b)))
        if both and (narrow or (_second_largest(va, jb) and _second_largest(vb, ja))):
            f = crossing_function(graph, tile, ctx, ja, jb)
            try:
                fa, fb = f(a), f(b)
                if math.isfinite(fa) and math.isfinite(fb) and fa * fb < 0:
                    tm = rootfind.guarded_secant(f, a, b, tol_rel=BETA_TOL)
            except (rootfind.RootFindError, ValueError, OverflowError):
                tm = None
            if tm is not None and not a < tm < b:
                tm = None
        if narrow:
            tm = 0.5 * (a + b) if tm is None else tm
            out.append((a, tm, la))
            out.append((tm, b, lb))
            continue
        if tm is None:
            tm = 0.5 * (a + b)
        lm, vm = _label(graph, tile, ctx, a, tm, False)
        rm, vrm = _label(graph, tile, ctx, tm, b, True)
        # right half first so that the left half is popped first
        stack.append((tm, b, rm, vrm, lb, vb, depth + 1))
        stack.append((a, tm, la, va, lm, vm, depth + 1))
    out.sort(key=lambda p: p[0])
    pieces: list[Piece] = []
    for a, b, lab in out:
        blo = lo if a == t_lo else math.exp(a)
        bhi = hi if b == t_hi else math.exp(b)
        if pieces and pieces[-1].label() == lab:
            pieces[-1].hi = bhi
        else:
            pieces.append(Piece(blo, bhi, lab[0], lab[1], ctx))
    return pieces


def shrink_coefficient(bt: BetaTransform, beta: float, support, signs) -> np.ndarray:
    """``(B_I^T B_I)^{-1} sigma``: the per-index shrinkage rate on a support."""
    W, _ = bt.rotated(beta)
    WI = W[:, list(support)]
    fac = cho_factor(WI.T @ WI, lower=True, check_finite=False)
    return cho_solve(fac, np.asarray(signs, dtype=float), check_finite=False)


def subdivide(bt: BetaTransform, tile: Tile, uncovered) -> list[float]:
    """Points in ``uncovered`` where a shrinkage coefficient changes sign.

    Each coefficient is assumed to vanish at most once per interval, so a
    sign change between the interval ends is located by bisection and equal
    end signs mean no break.
    """
    if not tile.support:
        return []
    breaks = []
    for lo, hi in uncovered:
        s_lo = shrink_coefficient(bt, lo, tile.support, tile.signs)
        s_hi = shrink_coefficient(bt, hi, tile.support, tile.signs)
        for k in np.flatnonzero(np.sign(s_lo) * np.sign(s_hi) < 0):
            def f(t, k=k):
                return shrink_coefficient(bt, math.exp(t), tile.support, tile.signs)[k]

            p = rootfind.BracketedProblem(f, math.log(lo), math.log(hi), tol_rel=BETA_TOL)
            try:
                breaks.append(math.exp(rootfind.bisect(p)))
            except rootfind.RootFindError as exc:
                raise TilingError(f"tile {tile.id}: subdivision failed on ({lo}, {hi}): {exc}") from exc
    return sorted(breaks)


def merge_preliminary(children: list[Piece]) -> list[Piece]:
    """Join adjacent pieces with the same mover whose ranges abut."""
    out: list[Piece] = []
    for p in sorted(children, key=lambda p: p.lo):
        if out and out[-1].label() == p.label() and abut(out[-1].hi, p.lo):
            out[-1] = Piece(out[-1].lo, p.hi, p.index, p.gamma, out[-1].context)
        else:
            out.append(Piece(p.lo, p.hi, p.index, p.gamma, p.context))
    return out


class Builder:
    """Mutable state of one tiling construction."""

    def __init__(self, graph: TilingGraph, max_tiles: int = MAX_TILES):
        self.g = graph
        self.max_tiles = max_tiles
        self.heap: list = []

    # -- scheduling -------------------------------------------------------

    def push(self, tile: Tile) -> None:
        tile.version += 1
        if tile.completed or tile.size >= self.g.s_max:
            return
        has_children = 0 if tile.child_edges else 1
        upper = self.g.alpha_upper(tile, tile.beta_minus)
        heapq.heappush(
            self.heap,
            (tile.size, has_children, tile.beta_minus, -upper, tile.id, tile.version),
        )

    def schedule_next(self) -> Tile | None:
        while self.heap:
            *_, tid, version = heapq.heappop(self.heap)
            t = self.g.tiles.get(tid)
            if t is None or t.version != version or t.completed:
                continue
            return t
        return None

    # -- graph surgery ----------------------------------------------------

    def _drop_edge(self, e: Edge) -> None:
        src, dst = self.g.tiles[e.source], self.g.tiles[e.target]
        src.child_edges = [x for x in src.child_edges if x is not e]
        dst.parent_edges = [x for x in dst.parent_edges if x is not e]

    def coalesce(self, tile: Tile) -> None:
        """Fuse abutting edges that join the same pair of tiles with one boundary formula."""
        for attr in ("parent_edges", "child_edges"):
            edges = sorted(getattr(tile, attr), key=lambda e: e.lo)
            i = 0
            while i + 1 < len(edges):
                e1, e2 = edges[i], edges[i + 1]
                if (
                    e1.source == e2.source
                    and e1.target == e2.target
                    and abut(e1.hi, e2.lo)
                    and e1.segment.same_formula(e2.segment)
                ):
                    e1.hi = e2.hi
                    e1.segment.hi = e2.segment.hi
                    self._drop_edge(e2)
                    del edges[i + 1]
                else:
                    i += 1
        tile.sort_edges()

    def merge_tiles(self, keep: Tile, drop: Tile) -> Tile:
        """Absorb ``drop`` into ``keep``; the result is marked incomplete."""
        g = self.g
        if keep is drop:
            return keep
        keep.beta_minus = min(keep.beta_minus, drop.beta_minus)
        keep.beta_plus = max(keep.beta_plus, drop.beta_plus)
        for e in drop.parent_edges:
            e.target = keep.id
            keep.parent_edges.append(e)
        for e in drop.child_edges:
            e.source = keep.id
            keep.child_edges.append(e)
        keep.floor.extend(drop.floor)
        keep.uncovered = _union(keep.uncovered + drop.uncovered)
        keep.completed = False
        del g.tiles[drop.id]
        keep.sort_edges()
        self.coalesce(keep)
        for e in list(keep.parent_edges):
            self.coalesce(g.tiles[e.source])
        self.push(keep)
        return keep

    # -- completion -------------------------------------------------------

    def complete(self, tile: Tile) -> None:
        g = self.g
        pieces: list[Piece] = []
        contexts = (
            [(tile.beta_minus, tile.beta_plus, Context(None))]
            if tile.id == g.root
            else [(e.lo, e.hi, Context(e.segment)) for e in tile.parent_edges]
        )
        for ulo, uhi in tile.uncovered:
            for clo, chi, ctx in contexts:
                lo, hi = max(ulo, clo), min(uhi, chi)
                if not hi > lo:
                    continue
                cuts = [] if g.variant == "lars" else subdivide(g.bt, tile, [(lo, hi)])
                bounds = [lo] + [c for c in cuts if lo < c < hi] + [hi]
                for a, b in zip(bounds[:-1], bounds[1:]):
                    try:
                        pieces.extend(find_children(g, tile, (a, b), ctx))
                    except SingularGramError as exc:
                        raise TilingError(f"tile {tile.id} on ({a:.6g}, {b:.6g}): {exc}") from exc
        for p in merge_preliminary(pieces):
            seg = BoundarySegment(p.lo, p.hi, p.index, p.gamma, tile.support, tile.signs)
            if p.index is None:
                tile.floor.append(seg)
                continue
            support, signs = child_key(tile, p.index, p.gamma)
            child = g.new_tile(support, signs, p.lo, p.hi)
            e = Edge(tile.id, child.id, p.lo, p.hi, seg)
            tile.child_edges.append(e)
            child.parent_edges.append(e)
            if len(g.tiles) > self.max_tiles:
                raise TilingError(f"tile count exceeded {self.max_tiles}")
        tile.uncovered = []
        tile.completed = True
        tile.sort_edges()
        self.merge_siblings(tile)
        for e in tile.child_edges:
            self.push(g.tiles[e.target])
        merge_across(self, tile)

    def merge_siblings(self, tile: Tile) -> None:
        """Merge adjacent children of ``tile`` that carry the same support and signs."""
        g = self.g
        i = 0
        while i + 1 < len(tile.child_edges):
            e1, e2 = tile.child_edges[i], tile.child_edges[i + 1]
            t1, t2 = g.tiles[e1.target], g.tiles[e2.target]
            if t1.key == t2.key and abut(e1.hi, e2.lo):
                if t1 is not t2:
                    keep, drop = (t1, t2) if t1.id < t2.id else (t2, t1)
                    self.merge_tiles(keep, drop)
                self.coalesce(tile)
                i = 0
                continue
            i += 1

    def run(self) -> TilingGraph:
        g = self.g
        while True:
            t = self.schedule_next()
            if t is None:
                break
            self.complete(t)
        return g


def _union(intervals):
    out: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if out and (lo <= out[-1][1] or abut(lo, out[-1][1])):
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(x) for x in out]


def _find_partner(builder: Builder, tile: Tile, child: Tile, side: str) -> Tile | None:
    """Search the neighbouring branch for a tile ``child`` should merge with.

    For ``side="left"`` the youngest-parent chain is climbed from ``tile``
    until a parent is found whose child edge on this branch is not its
    youngest; the merging partner must then lie on the oldest-child chain of
    the next younger sibling.  ``side="right"`` mirrors every step.
    """
    g = builder.g
    left = side == "left"
    edge_of = (lambda edges: edges[0]) if left else (lambda edges: edges[-1])
    line = child.beta_minus if left else child.beta_plus
    cur = tile
    while True:
        if cur.id == g.root or not cur.parent_edges:
            return None
        e = edge_of(cur.parent_edges)
        if not abut(e.lo if left else e.hi, line):
            return None
        p = g.tiles[e.source]
        k = next(i for i, x in enumerate(p.child_edges) if x is e)
        end = 0 if left else len(p.child_edges) - 1
        if k == end:
            if not abut(p.beta_minus if left else p.beta_plus, line):
                return None
            cur = p
            continue
        sib = p.child_edges[k - 1] if left else p.child_edges[k + 1]
        if not abut(sib.hi if left else sib.lo, line):
            return None
        node = g.tiles[sib.target]
        seen = set()
        while node is not None and node.id not in seen:
            seen.add(node.id)
            if not abut(node.beta_plus if left else node.beta_minus, line):
                return None
            if node is not child and node.key == child.key:
                return node
            if not node.child_edges:
                return None
            nxt = node.child_edges[-1] if left else node.child_edges[0]
            if not abut(nxt.hi if left else nxt.lo, line):
                return None
            node = g.tiles[nxt.target]
        return None


def merge_across(builder: Builder, tile: Tile) -> None:
    """Merge the youngest and oldest child of a completed tile with their partners."""
    g = builder.g
    for side in ("left", "right"):
        tile = g.tiles.get(tile.id)
        if tile is None or not tile.child_edges:
            return
        e = tile.child_edges[0] if side == "left" else tile.child_edges[-1]
        if not abut(e.lo if side == "left" else e.hi, tile.beta_minus if side == "left" else tile.beta_plus):
            continue
        child = g.tiles[e.target]
        partner = _find_partner(builder, tile, child, side)
        if partner is not None:
            keep, drop = (partner, child) if partner.id < child.id else (child, partner)
            builder.merge_tiles(keep, drop)


def build(
    bt: BetaTransform,
    beta_range=(1e-6, 100.0),
    s_max: int = 1,
    variant: str = "lasso",
    max_tiles: int = MAX_TILES,
) -> TilingGraph:
    """Tile ``beta_range x (0, inf)`` by support and sign pattern up to ``s_max``.

    Every tile with fewer than ``s_max`` entries is completed; tiles of size
    ``s_max`` are created but their children are not computed.
    """
    lo, hi = map(float, beta_range)
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < beta_min < beta_max, got {beta_range}")
    if variant not in ("lasso", "lars"):
        raise ValueError(f"unknown variant {variant!r}")
    if not 0 <= s_max <= bt.m:
        raise ValueError(f"s_max must lie in [0, m={bt.m}], got {s_max}")
    g = TilingGraph(bt=bt, beta_range=(lo, hi), s_max=s_max, variant=variant)
    root = g.new_tile((), (), lo, hi)
    g.root = root.id
    builder = Builder(g, max_tiles=max_tiles)
    builder.push(root)
    return builder.run()
