"""Support tilings of the (beta, alpha) plane for multi-penalty sparse unmixing."""

from tilepath.problem import BetaTransform, Problem, RegularizedSolution, decompose
from tilepath.path import PathKnot, kkt_check, path, solve_on_support
from tilepath.tiling import TilingGraph, build, locate

__all__ = [
    "BetaTransform",
    "PathKnot",
    "Problem",
    "RegularizedSolution",
    "TilingGraph",
    "build",
    "decompose",
    "kkt_check",
    "locate",
    "path",
    "solve_on_support",
]

__version__ = "0.1.0"
