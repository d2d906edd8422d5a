"""Robin Laplacian eigenvalues: balls, shells, rectangles and planar polygons.

Submodules are imported on demand (``from robinlab import fem2d``) so that the
command-line entry point can set thread limits before numpy loads.
"""

__version__ = "0.1.0"
