"""Certified piecewise-linear approximation of real projective varieties.

Pipeline: :func:`isoplex.driver.solve` builds an antipodally symmetric
simplicial-cone decomposition on which every face passes a Bernstein-based
test, :func:`isoplex.verify.check_certificate` replays the result in exact
arithmetic, and :mod:`isoplex.topo` extracts the zero set of the
interpolant and its topology.
"""
__version__ = "0.1.0"

from .driver import SolveOutcome, SolveParams, Status, solve
from .poly import HomogeneousPoly, PolySystem, parse_polys, variables

__all__ = [
    "HomogeneousPoly",
    "PolySystem",
    "SolveOutcome",
    "SolveParams",
    "Status",
    "parse_polys",
    "solve",
    "variables",
]
