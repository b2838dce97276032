"""Point queries on a finished tiling."""

from __future__ import annotations

import math

from tilepath.tiling.build import Context, _label_at
from tilepath.tiling.graph import Tile, TilingGraph


class BelowComputedDepth(LookupError):
    """The point lies below every lower boundary the tiling has computed."""


def context_at(graph: TilingGraph, tile: Tile, beta: float) -> Context:
    if tile.id == graph.root:
        return Context(None)
    e = tile.parent_edge_at(beta)
    if e is None:
        raise ValueError(f"beta={beta} outside tile {tile.id}")
    return Context(e.segment)


def lower_boundary(graph: TilingGraph, tile: Tile, beta: float) -> float:
    """``alpha^-`` of ``tile`` at ``beta``.

    Uses the stored boundary where the tile is complete and otherwise the
    largest admissible knot candidate, which is the same quantity computed
    on the spot.
    """
    stored = graph.alpha_lower(tile, beta)
    if stored is not None:
        return stored
    (j, _), vals, _ = _label_at(graph, tile, context_at(graph, tile, beta), beta)
    if j is None:
        return 0.0
    return float(vals[j])


def locate(graph: TilingGraph, beta: float, alpha: float) -> int:
    """Id of the tile holding ``(beta, alpha)``.

    Tiles are half-open in ``alpha``: a tile owns ``[alpha^-, alpha^+)``.
    Raises :class:`BelowComputedDepth` when ``alpha`` lies under a tile
    whose children were never computed.
    """
    lo, hi = graph.beta_range
    if not lo <= beta <= hi:
        raise ValueError(f"beta={beta} outside the tiled range {graph.beta_range}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    tile = graph.tiles[graph.root]
    for _ in range(len(graph.tiles) + 1):
        if alpha >= lower_boundary(graph, tile, beta):
            return tile.id
        e = tile.child_edge_at(beta)
        if e is None:
            raise BelowComputedDepth(
                f"alpha={alpha:.6g} at beta={beta:.6g} lies below tile {tile.id} "
                f"(support size {tile.size}, s_max {graph.s_max})"
            )
        tile = graph.tiles[e.target]
    raise RuntimeError("cycle in tiling graph")


def alpha_interval(graph: TilingGraph, tile_id: int, beta: float) -> tuple[float, float]:
    tile = graph.tiles[tile_id]
    return lower_boundary(graph, tile, beta), graph.alpha_upper(tile, beta)


def boundary_distance(graph: TilingGraph, tile_id: int, beta: float, alpha: float) -> float:
    """Relative distance in ``alpha`` from the point to the nearer boundary of its tile."""
    lo, up = alpha_interval(graph, tile_id, beta)
    d_up = math.inf if math.isinf(up) else (up - alpha) / alpha
    d_lo = math.inf if lo <= 0 else (alpha - lo) / alpha
    return min(d_up, d_lo)
