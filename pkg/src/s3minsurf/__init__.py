"""Numerical minimal surfaces in the 3-sphere desingularizing Clifford tori.

Library layout:

* ``s3geom`` -- points, great circles, Clifford tori and isometries of S^3.
* ``tessellation`` -- the pentahedral tessellation and all named configuration
  geometry for parameters (m, ell).
* ``plateau`` -- discrete Plateau solver (fixed and free boundary) on S^3.
* ``assembly`` -- symmetry-group generation, orbit placement, welding,
  Euler characteristic / genus.
* ``verify`` -- separation, symmetry residuals, area bounds, reports.
* ``cli`` -- command-line pipeline, mesh export, report rendering.
"""

from .errors import (
    AssemblyError,
    ConstructionError,
    ExportError,
    GroupClosureError,
    ParameterError,
    PolygonError,
    SolverError,
    TopologyError,
    WeldError,
)

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "ConstructionError",
    "ExportError",
    "GroupClosureError",
    "ParameterError",
    "PolygonError",
    "SolverError",
    "TopologyError",
    "WeldError",
    "__version__",
]
