"""Zero-temperature fermion drift-diffusion on the unit square.

Two complementary engines for u_t = div(u grad(u + V)):

* closed-form / shooting machinery for 1D stationary profiles
  (``stationary1d``, backed by ``specfun`` and ``potential``);
* a linearized implicit P1 finite element stepper for the 2D evolution
  with mixed Dirichlet / zero-flux boundaries (``mesh2d``, ``fem2d``,
  ``observables``), cross-validated by an explicit 1D scheme
  (``oracle1d``).

``experiments`` and the ``fermidrift`` CLI drive both from JSON
configs, emitting reproducible CSV artifacts.
"""

from .errors import EngineError, FermidriftError, ValidationError
from .fem2d import (AssemblyContext, BoundarySpec, Dirichlet, Field,
                    StepperConfig, Trajectory, ZeroFlux, assemble_step,
                    detect_steady, evolve, recover_flux, solve_linear)
from .mesh2d import BoundaryTag, Mesh2D, build_structured, classify_boundary
from .observables import TimeSeries, boundary_current, l1_norm, record
from .oracle1d import Grid1D, fd_evolve_1d
from .potential import (ParseError, Potential, builtin_potential, derivative,
                        max_value, parse_expression)
from .specfun import (BranchDomainError, lambert_w0, lambert_w_upper)
from .stationary1d import (CriticalValues, DirichletPair, LimitProfile,
                           StationaryProfile, critical_values, envelope,
                           integrate_cauchy, limit_profile, phi,
                           propagate_piecewise, solve_bvp, stationary_current)

__version__ = "0.1.0"

__all__ = [
    "AssemblyContext", "BoundarySpec", "BoundaryTag", "BranchDomainError",
    "CriticalValues", "Dirichlet", "DirichletPair", "EngineError",
    "FermidriftError", "Field", "Grid1D", "LimitProfile", "Mesh2D",
    "ParseError", "Potential", "StationaryProfile", "StepperConfig",
    "TimeSeries", "Trajectory", "ValidationError", "ZeroFlux",
    "assemble_step", "boundary_current", "build_structured",
    "builtin_potential", "classify_boundary", "critical_values",
    "derivative", "detect_steady", "envelope", "evolve", "fd_evolve_1d",
    "integrate_cauchy", "l1_norm", "lambert_w0", "lambert_w_upper",
    "limit_profile", "max_value", "parse_expression", "phi",
    "propagate_piecewise", "record", "recover_flux", "solve_bvp",
    "solve_linear", "stationary_current",
]
