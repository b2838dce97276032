"""Support tiling of the (beta, alpha) parameter plane."""

from tilepath.tiling.build import (
    Builder,
    TilingError,
    build,
    crossing,
    find_children,
    merge_across,
    merge_preliminary,
    subdivide,
)
from tilepath.tiling.graph import BoundarySegment, Edge, Tile, TilingGraph
from tilepath.tiling.query import BelowComputedDepth, alpha_interval, locate, lower_boundary

__all__ = [
    "BelowComputedDepth",
    "BoundarySegment",
    "Builder",
    "Edge",
    "Tile",
    "TilingError",
    "TilingGraph",
    "alpha_interval",
    "build",
    "crossing",
    "find_children",
    "locate",
    "lower_boundary",
    "merge_across",
    "merge_preliminary",
    "subdivide",
]
