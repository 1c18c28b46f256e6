"""Symmetric periodic simultaneous binary collision orbits of the planar
pairwise symmetric 1, m, 1, m four-body problem."""

__version__ = "0.1.0"
