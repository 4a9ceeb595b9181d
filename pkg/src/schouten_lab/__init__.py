"""Numerical laboratory for the sigma_2 operator family on extended matrices
and the perturbed geodesic equation of conformal factors.

Modules
-------
symfun      elementary symmetric functions, Newton transformations, Garding cones
gsop        the operators F_k(R) on extended matrices and the function H_k
certify     sampled and exact certification suites
grid        space-time lattice, stencils, conformal quantities
solver      damped-Newton continuity method
functional  the four-dimensional F-functional and its variations
cli         batch command-line front end
"""
from . import certify, functional, grid, gsop, solver, symfun
from .errors import (ArgumentError, DomainError, LinearizationError, NonConvergenceError,
                     SamplingError, SetupError, SolverError, StallError)

__version__ = "0.1.0"

__all__ = [
    "symfun", "gsop", "certify", "grid", "solver", "functional",
    "ArgumentError", "DomainError", "SamplingError", "SetupError", "LinearizationError",
    "SolverError", "StallError", "NonConvergenceError",
]
