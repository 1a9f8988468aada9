from .config import SolverConfig
from .integrator import advise_dt, exponential_coefficients, run, run_coupled, step
from .nonlinear import nonlinear_term, perturbed_nonlinear
from .trajectory import CoupledTrajectory, Snapshot, Trajectory

__all__ = [
    "CoupledTrajectory",
    "Snapshot",
    "SolverConfig",
    "Trajectory",
    "advise_dt",
    "exponential_coefficients",
    "nonlinear_term",
    "perturbed_nonlinear",
    "run",
    "run_coupled",
    "step",
]
