"""Polygonal and polyhedral linear elasticity with one-point linear smoothing."""

from .basis import BasisError, BasisEval, wachspress_2d, wachspress_3d
from .kernels import BACKEND_NAME
from .mesh import (
    Box,
    DegenerateCellError,
    LShape,
    MeshError,
    NonSimpleVertexError,
    Polytope,
    PolytopeMesh,
    SmoothingCell,
    generate_cvt_mesh,
    is_star_convex,
    subdivide_to_simplices,
)
from .smoothing import (
    Material,
    assemble_f,
    assemble_W,
    element_stiffness,
    integrate_function,
    smoothed_basis,
)
from .solver import (
    BoundaryCondition,
    DisplacementField,
    GlobalSystem,
    SingularSystemError,
    assemble,
    error_norms,
    solve,
    strain_energy,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "BasisError", "BasisEval", "BoundaryCondition", "Box",
    "DegenerateCellError", "DisplacementField", "GlobalSystem", "LShape", "Material",
    "MeshError", "NonSimpleVertexError", "Polytope", "PolytopeMesh",
    "SingularSystemError", "SmoothingCell", "assemble", "assemble_W", "assemble_f",
    "element_stiffness", "error_norms", "generate_cvt_mesh", "integrate_function",
    "is_star_convex", "smoothed_basis", "solve", "strain_energy",
    "subdivide_to_simplices", "wachspress_2d", "wachspress_3d",
]
