"""Eigenvalues, boundary identities and strain energies of vibrating thin plates.

Typical use::

    from biplate import DomainSpec, BCKind, assemble, solve_lowest, extract_trace

    op = assemble(DomainSpec.parse("disk:1"), BCKind.parse("navier"))
    pair = solve_lowest(op, 1)[0]
    trace = extract_trace(pair)
"""

from .discretize import BCKind, Resolution, assemble, default_resolution
from .eigensolve import EigenPair, solve_lowest
from .elasticity import Material, poisson_sweep, strain_energy_boundary, strain_energy_volume
from .errors import (
    AssemblyError,
    BiplateError,
    BoundaryConditionError,
    ConfigError,
    DomainError,
    SolverError,
    TraceError,
)
from .geometry import DomainSpec, build_boundary
from .identities import IdentityReport, convergence_study, evaluate
from .traces import BoundaryTrace, extract_trace

__version__ = "0.1.0"

__all__ = [
    "AssemblyError", "BCKind", "BiplateError", "BoundaryConditionError", "BoundaryTrace", "ConfigError",
    "DomainError", "DomainSpec", "EigenPair", "IdentityReport", "Material", "Resolution", "SolverError",
    "TraceError", "assemble", "build_boundary", "convergence_study", "default_resolution", "evaluate",
    "extract_trace", "poisson_sweep", "solve_lowest", "strain_energy_boundary", "strain_energy_volume",
]
