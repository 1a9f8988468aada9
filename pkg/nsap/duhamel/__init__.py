from .picard import PicardConfig, PicardResult, duhamel_residual, heat_semigroup, oracle_distance, picard_solve
from .smoothing import SmoothingFit, mixed_norm_integral, rough_initial, smoothing_rate_fit

__all__ = [
    "PicardConfig",
    "PicardResult",
    "SmoothingFit",
    "duhamel_residual",
    "heat_semigroup",
    "mixed_norm_integral",
    "oracle_distance",
    "picard_solve",
    "rough_initial",
    "smoothing_rate_fit",
]
