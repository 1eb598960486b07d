"""Compressible vertical-slice Eady frontogenesis testbed."""

from .domain import (ConfigError, Grid, PhysicalConstants, RunConfig, State,
                     build_grid, default_constants, validate_config)
from .thermo import ThermoDomainError, density_from_exner, exner, exner_partials
from .initial import (BreedingError, HydrostaticSolveError, background_theta,
                      breed, geostrophic_v, hydrostatic_density, initial_state,
                      initial_u, mode_constant, perturbed_theta)
from .dynamics import (Tendency, advect_scalar, tendencies,
                       velocity_advection_advective,
                       velocity_advection_vector_invariant)
from .timestep import (CFLError, ColumnPreconditioner, NewtonError,
                       SolverConfig, SolverStats, step_implicit_midpoint,
                       step_ssprk3)
from .diagnostics import (DiagnosticRecord, energies, front_intensity, mass,
                          noise_metric, potential_vorticity, record, rmsv)

__version__ = "0.1.0"
