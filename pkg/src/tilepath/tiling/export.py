"""JSON and SVG renderings of a finished tiling."""

from __future__ import annotations

import json
import math
from xml.sax.saxutils import escape

import numpy as np

from tilepath.tiling.graph import Tile, TilingGraph
from tilepath.tiling.query import lower_boundary

DEFAULT_RESOLUTION = 64
PALETTE = ("#f7f7f7", "#c6dbef", "#9ecae1", "#6baed6", "#4292c6", "#2171b5", "#08519c", "#08306b")


def _breaks(tile: Tile, segs) -> list[float]:
    pts = {tile.beta_minus, tile.beta_plus}
    for s in segs:
        pts.update((s.lo, s.hi))
    return sorted(p for p in pts if tile.beta_minus <= p <= tile.beta_plus)


def _sample(breaks: list[float], resolution: int) -> np.ndarray:
    out = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        xs = np.geomspace(a, b, resolution)
        out.append(xs if not out else xs[1:])
    if not out:
        return np.array(breaks[:1])
    return np.concatenate(out)


def _nudge(beta: float, tile: Tile) -> float:
    # boundary queries at the extreme right end of a range are owned by the last piece
    return min(max(beta, tile.beta_minus), tile.beta_plus)


def tile_polylines(graph: TilingGraph, tile: Tile, resolution: int = DEFAULT_RESOLUTION):
    """Sampled ``(beta, alpha^+)`` and ``(beta, alpha^-)`` polylines, ``inf`` kept as is."""
    up_b = _sample(_breaks(tile, [e for e in tile.parent_edges]), resolution)
    lo_b = _sample(_breaks(tile, tile.boundary_segments), resolution)
    upper = [(float(b), float(graph.alpha_upper(tile, _nudge(b, tile)))) for b in up_b]
    lower = [(float(b), float(lower_boundary(graph, tile, _nudge(b, tile)))) for b in lo_b]
    return upper, lower


def _num(x: float):
    return None if not math.isfinite(x) else x


def to_dict(graph: TilingGraph, resolution: int = DEFAULT_RESOLUTION) -> dict:
    tiles = []
    for tid in sorted(graph.tiles):
        t = graph.tiles[tid]
        upper, lower = tile_polylines(graph, t, resolution)
        tiles.append(
            {
                "id": t.id,
                "support": list(t.support),
                "signs": list(t.signs),
                "beta_range": [t.beta_minus, t.beta_plus],
                "completed": t.completed,
                "upper": [[b, _num(a)] for b, a in upper],
                "lower": [[b, _num(a)] for b, a in lower],
            }
        )
    edges = [
        {
            "source": e.source,
            "target": e.target,
            "beta_range": [e.lo, e.hi],
            "index": e.segment.index,
            "entering": e.segment.entering,
        }
        for e in graph.edges()
    ]
    return {
        "beta_range": list(graph.beta_range),
        "s_max": graph.s_max,
        "variant": graph.variant,
        "root": graph.root,
        "tiles": tiles,
        "edges": edges,
    }


def to_json(graph: TilingGraph, resolution: int = DEFAULT_RESOLUTION) -> str:
    return json.dumps(to_dict(graph, resolution), allow_nan=False) + "\n"


def to_svg(
    graph: TilingGraph,
    resolution: int = DEFAULT_RESOLUTION,
    highlight=None,
    width: int = 800,
    height: int = 600,
) -> str:
    """Filled polygon per tile in log-beta / log-alpha axes, coloured by support size.

    Tiles whose support equals ``highlight`` get a red outline.  Unbounded
    tops and zero floors are clipped to the plot frame.
    """
    data = [(t, *tile_polylines(graph, graph.tiles[tid], resolution)) for tid, t in sorted(graph.tiles.items())]
    finite = [a for _, up, lo in data for _, a in up + lo if 0 < a < math.inf]
    if finite:
        a_lo, a_hi = min(finite) / 4, max(finite) * 4
    else:
        a_lo, a_hi = 1e-3, 1e3
    b_lo, b_hi = graph.beta_range
    pad = 40
    lx = (math.log10(b_lo), math.log10(b_hi))
    ly = (math.log10(a_lo), math.log10(a_hi))

    def px(b, a):
        a = min(max(a, a_lo), a_hi) if a > 0 else a_lo
        x = pad + (math.log10(b) - lx[0]) / (lx[1] - lx[0]) * (width - 2 * pad)
        y = height - pad - (math.log10(a) - ly[0]) / (ly[1] - ly[0]) * (height - 2 * pad)
        return f"{x:.2f},{y:.2f}"

    hl = tuple(sorted(highlight)) if highlight is not None else None
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="black"/>',
    ]
    for t, upper, lower in data:
        pts = [px(b, a) for b, a in upper] + [px(b, a) for b, a in reversed(lower)]
        colour = PALETTE[min(t.size, len(PALETTE) - 1)]
        stroke = ' stroke="red" stroke-width="2"' if hl is not None and t.support == hl else ' stroke="#555" stroke-width="0.5"'
        label = escape(f"tile {t.id}: support {list(t.support)} signs {list(t.signs)}")
        out.append(f'<polygon points="{" ".join(pts)}" fill="{colour}"{stroke}><title>{label}</title></polygon>')
    out.append(
        f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle" font-size="12">'
        f"log10 beta [{lx[0]:.2f}, {lx[1]:.2f}]</text>"
    )
    out.append(
        f'<text x="12" y="{height / 2:.0f}" font-size="12" transform="rotate(-90 12 {height / 2:.0f})" '
        f'text-anchor="middle">log10 alpha [{ly[0]:.2f}, {ly[1]:.2f}]</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
