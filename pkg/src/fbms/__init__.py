"""Discrete free-boundary minimal surfaces in convex domains.

Builds triangle-mesh free-boundary minimal surfaces in convex containers
(primarily the unit ball), computes their Steklov (Dirichlet-to-Neumann)
spectra, and verifies the spectral, length and curvature inequalities that
such surfaces satisfy, with explicit margins.
"""

__version__ = "0.1.0"

from .ambient import (
    AmbientError,
    Ball,
    ConvexAmbient,
    LevelSetBody,
    ambient_from_config,
    ellipsoid,
)
from .exemplars import (
    critical_catenoid,
    critical_catenoid_parameters,
    equatorial_disk,
    perturb,
)
from .mesh import (
    MeshError,
    Topology,
    TriMesh,
    load_mesh,
    read_obj,
    read_off,
    refine,
    save_mesh,
    write_obj,
    write_off,
)
from .solver import (
    ConvergenceReport,
    SolverConfig,
    SolverError,
    area_gradient,
    discrete_mean_curvature,
    mean_curvature_sup,
    minimize_area,
    orthogonality_defect,
)

__all__ = [
    "__version__",
    "AmbientError",
    "Ball",
    "ConvexAmbient",
    "LevelSetBody",
    "ambient_from_config",
    "ellipsoid",
    "critical_catenoid",
    "critical_catenoid_parameters",
    "equatorial_disk",
    "perturb",
    "MeshError",
    "Topology",
    "TriMesh",
    "load_mesh",
    "read_obj",
    "read_off",
    "refine",
    "save_mesh",
    "write_obj",
    "write_off",
    "ConvergenceReport",
    "SolverConfig",
    "SolverError",
    "area_gradient",
    "discrete_mean_curvature",
    "mean_curvature_sup",
    "minimize_area",
    "orthogonality_defect",
]
