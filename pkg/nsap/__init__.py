"""Pseudo-spectral Navier-Stokes simulator with an a priori estimate monitor."""

__all__ = ["__version__"]

__version__ = "0.1.0"
