"""Thin irreducible modules of Q-polynomial distance-regular graphs.

Two independent routes to the same per-module data: direct matrix
computation on the graph (:mod:`thinmod.invariants`) and closed forms from
the parameter array (:mod:`thinmod.params`).  :mod:`thinmod.report` puts
them side by side.
"""

__version__ = "0.1.0"
