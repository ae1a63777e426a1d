"""Detecting and reconstructing holes from boundary Dirichlet-to-Neumann data."""

from .errors import (
    AlgebraClosureError,
    AssemblyError,
    CriterionFailure,
    EitHolesError,
    FormatError,
    Indeterminate,
    MeanViolation,
    MeshError,
    NeedsMoreGenerators,
    SeparationFailure,
    TopologyError,
)
from .mesh import DomainSpec, SurfaceMesh, build_synthetic, read_surf2, validate_mesh, write_surf2
from .dn import DNOperator, assemble_dn, spectrum
from .detector import Classification, classify, recover_boundary_length
from .cover import DoubledSurface, double_cover, extract_sheet
from .algebra import TraceAlgebraElement, admissible_basis, make_element, product, residual_grounded, residual_isolated
from .config import ExperimentConfig

__version__ = "0.1.0"

__all__ = [
    "AlgebraClosureError", "AssemblyError", "CriterionFailure", "EitHolesError", "FormatError",
    "Indeterminate", "MeanViolation", "MeshError", "NeedsMoreGenerators", "SeparationFailure",
    "TopologyError", "DomainSpec", "SurfaceMesh", "build_synthetic", "read_surf2", "validate_mesh",
    "write_surf2", "DNOperator", "assemble_dn", "spectrum", "Classification", "classify",
    "recover_boundary_length", "DoubledSurface", "double_cover", "extract_sheet",
    "TraceAlgebraElement", "admissible_basis", "make_element", "product", "residual_grounded",
    "residual_isolated", "ExperimentConfig", "__version__",
]
