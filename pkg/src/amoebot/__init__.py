"""Leader election by erosion for amoebots on the triangular and FCC lattices."""

__version__ = "0.1.0"
