"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid build parameters (m, ell, variant combinations)."""


class ConstructionError(RuntimeError):
    """A configuration invariant failed during construction."""


class PolygonError(ValueError):
    """Invalid boundary polygon (self-intersecting or degenerate)."""


class SolverError(RuntimeError):
    """Mesh degeneration during area minimization."""


class GroupClosureError(RuntimeError):
    """Group closure exceeded the element cap."""


class AssemblyError(RuntimeError):
    """Orbit placement produced ambiguous or duplicate copies."""


class WeldError(RuntimeError):
    """Copies could not be welded into a closed mesh."""


class TopologyError(RuntimeError):
    """Welded mesh is non-orientable or combinatorially inconsistent."""


class ExportError(RuntimeError):
    """Mesh export failed (e.g. projection pole too close to the surface)."""
