"""RBF partition-of-unity interpolation with per-patch radius and shape selection."""

__version__ = "0.1.0"

from .errors import (
    DegenerateCoverError,
    DuplicateNodeError,
    ModelFormatError,
    NotSPDError,
    OutOfDomainError,
    RBFPUError,
    UnfittableSubdomainError,
    ValidationError,
)
from .geometry import Dataset, build_spatial_index, generate_pu_cover, halton_sequence, radius_range
from .kernels import IMQ, MATERN_C2, KernelKind, gram_matrix, kernel_eval
from .pu import PUModel, evaluate, fit_pu_fixed, fit_pu_variable
from .selection import shape_grid

__all__ = [
    "Dataset",
    "DegenerateCoverError",
    "DuplicateNodeError",
    "IMQ",
    "KernelKind",
    "MATERN_C2",
    "ModelFormatError",
    "NotSPDError",
    "OutOfDomainError",
    "PUModel",
    "RBFPUError",
    "UnfittableSubdomainError",
    "ValidationError",
    "build_spatial_index",
    "evaluate",
    "fit_pu_fixed",
    "fit_pu_variable",
    "generate_pu_cover",
    "gram_matrix",
    "halton_sequence",
    "kernel_eval",
    "radius_range",
    "shape_grid",
]
