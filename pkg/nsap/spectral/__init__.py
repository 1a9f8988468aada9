from .checkpoint import read_checkpoint, write_checkpoint
from .fields import ScalarField, TensorField, VectorField, outer, symmetric_outer
from .grid import Grid, make_grid
from .operators import (
    dealias,
    divergence,
    gradient,
    laplacian,
    leray_project,
    pressure_from_velocity,
    riesz_apply,
    riesz_contract,
    spectral_derivative,
    tensor_divergence,
    transform_forward,
    transform_inverse,
)

__all__ = [
    "Grid",
    "ScalarField",
    "TensorField",
    "VectorField",
    "dealias",
    "divergence",
    "gradient",
    "laplacian",
    "leray_project",
    "make_grid",
    "outer",
    "pressure_from_velocity",
    "read_checkpoint",
    "riesz_apply",
    "riesz_contract",
    "spectral_derivative",
    "symmetric_outer",
    "tensor_divergence",
    "transform_forward",
    "transform_inverse",
    "write_checkpoint",
]
