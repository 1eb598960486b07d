"""Model constants, staggered grid, prognostic state, and run configuration.

Unit conventions live here and nowhere else: SI throughout, potential
temperature in K, Exner pressure dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class ConfigError(ValueError):
    """A run-configuration invariant is violated; `key` names the offender."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class PhysicalConstants:
    """Dimensional constants of the slice model (SI units).

    Derived scalars (cv, s, Ro, Fr, Bu) are properties so they can never
    drift out of sync with the primaries.
    """

    L: float = 1.0e6        # channel half-width [m]; domain x in [-L, L]
    H: float = 1.0e4        # lid height [m]
    f: float = 1.0e-4       # Coriolis frequency [1/s]
    g: float = 10.0         # gravity [m/s^2]
    p0: float = 1.0e5       # reference pressure [Pa]
    theta0: float = 300.0   # reference potential temperature [K]
    shear: float = 1.0e-3   # background vertical shear [1/s]
    N2: float = 2.5e-5      # Brunt-Vaisala frequency squared [1/s^2]
    Pi0: float = 0.864      # Exner offset in the out-of-slice forcing
    R: float = 287.0        # dry-air gas constant [J/kg/K]
    cp: float = 1004.5      # specific heat at constant pressure [J/kg/K]
    u0: float = 5.0         # representative velocity for Ro and Fr [m/s]

    @property
    def cv(self) -> float:
        return self.cp - self.R

    @property
    def s(self) -> float:
        """Prescribed y-gradient of background potential temperature [K/m]."""
        return -self.theta0 * self.f * self.shear / self.g

    @property
    def N(self) -> float:
        return math.sqrt(self.N2)

    @property
    def Ro(self) -> float:
        return self.u0 / (self.f * self.L)

    @property
    def Fr(self) -> float:
        return self.u0 / (self.N * self.H)

    @property
    def Bu(self) -> float:
        return self.Ro / self.Fr


def default_constants() -> PhysicalConstants:
    """Constants of the standard frontogenesis setup."""
    return PhysicalConstants()


@dataclass(frozen=True)
class Grid:
    """Uniform Arakawa-C staggering: u on x-faces, w on z-faces, scalars at centers.

    x is periodic with period 2L (nx distinct x-faces, face i is the left
    face of cell i). z-face 0 is the floor z = 0 and z-face nz is the lid.
    """

    nx: int
    nz: int
    dx: float
    dz: float
    x_faces: np.ndarray      # (nx,)
    x_centers: np.ndarray    # (nx,)
    z_faces: np.ndarray      # (nz+1,)
    z_centers: np.ndarray    # (nz,)
    length: float            # 2L
    height: float            # H

    @property
    def cell_area(self) -> float:
        return self.dx * self.dz


def build_grid(nx: int, nz: int, c: PhysicalConstants) -> Grid:
    """Build the staggered grid for an nx-by-nz cell layout."""
    if nx < 4 or nz < 4:
        raise ConfigError("nx" if nx < 4 else "nz",
                          f"cell counts must be >= 4, got nx={nx}, nz={nz}")
    length = 2.0 * c.L
    dx = length / nx
    dz = c.H / nz
    x_all = np.linspace(-c.L, c.L, nx + 1)   # endpoints exact
    x_faces = x_all[:-1].copy()
    x_centers = x_faces + 0.5 * dx
    z_faces = np.linspace(0.0, c.H, nz + 1)
    z_centers = z_faces[:-1] + 0.5 * dz
    return Grid(nx=nx, nz=nz, dx=dx, dz=dz,
                x_faces=x_faces, x_centers=x_centers,
                z_faces=z_faces, z_centers=z_centers,
                length=length, height=c.H)


@dataclass
class State:
    """Prognostic fields on their staggered locations, plus model time."""

    t: float
    u: np.ndarray        # (nx, nz)   x-velocity on x-faces
    w: np.ndarray        # (nx, nz+1) z-velocity on z-faces; rows 0, nz stay 0
    v: np.ndarray        # (nx, nz)   out-of-slice velocity at centers
    theta_s: np.ndarray  # (nx, nz)   perturbation potential temperature at centers
    D: np.ndarray        # (nx, nz)   density at centers

    def copy(self) -> "State":
        return State(t=self.t, u=self.u.copy(), w=self.w.copy(),
                     v=self.v.copy(), theta_s=self.theta_s.copy(),
                     D=self.D.copy())

    def zero_boundary_w(self) -> None:
        self.w[:, 0] = 0.0
        self.w[:, -1] = 0.0


INTEGRATORS = ("explicit-ssprk3", "implicit-midpoint")
VELOCITY_FORMS = ("advective", "vector-invariant")
UPWIND_ORDERS = (1, 3)


@dataclass
class RunConfig:
    """Everything a run needs; defaults reproduce the control experiment."""

    constants: PhysicalConstants = field(default_factory=default_constants)
    nx: int = 30
    nz: int = 30
    dt: float = 300.0                    # [s]
    integrator: str = "implicit-midpoint"
    velocity_form: str = "advective"
    upwind_order: int = 3                # scalar (theta_s, v) upwinding; momentum is order 1
    centered_advection: bool = False     # disable all upwinding (verification runs)
    amplitude: float = -7.5              # normal-mode perturbation amplitude a
    breed: bool = True
    breed_vmax: float = 3.0              # [m/s] breeding threshold on max|v|
    breed_max_days: float = 10.0         # give up if threshold not reached
    run_days: float = 25.0
    timeseries_interval: float = 3600.0  # [s]
    snapshot_interval: float = 43200.0   # [s]
    checkpoint_interval: float = 86400.0 # [s]; 0 disables periodic checkpoints
    surface_exner: float = 1.0           # background-profile anchor Pi(z=0)
    mass_weighted_rmsv: bool = False
    # the absolute floor must sit above the finite-difference residual noise,
    # eps*g*dt/u0*sqrt(n), across grid sizes; 1e-9 is ~100x that at dt = 300 s
    newton_abs_tol: float = 1.0e-9
    newton_rel_tol: float = 1.0e-8
    newton_max_iters: int = 30
    linear_rel_tol: float = 1.0e-4
    linear_max_iters: int = 400
    linear_restart: int = 30
    preconditioner: str = "column-block" # or "none"
    cfl_max: float = 0.9                 # acoustic Courant cap for the explicit stepper
    out_dir: str = "out"

    def grid(self) -> Grid:
        return build_grid(self.nx, self.nz, self.constants)


def _check_positive(cfg: RunConfig, key: str) -> None:
    if getattr(cfg, key) <= 0:
        raise ConfigError(key, f"must be positive, got {getattr(cfg, key)}")


def _check_cadence(cfg: RunConfig, key: str) -> None:
    """Cadences must be positive integer multiples of dt (0 allowed for checkpoints)."""
    value = getattr(cfg, key)
    if key == "checkpoint_interval" and value == 0:
        return
    if value <= 0:
        raise ConfigError(key, f"must be positive, got {value}")
    m = value / cfg.dt
    if abs(m - round(m)) > 1e-9 * max(1.0, m) or round(m) < 1:
        raise ConfigError(key, f"cadence {value} is not a multiple of dt={cfg.dt}")


def validate_config(cfg: RunConfig) -> RunConfig:
    """Return the config unchanged if every invariant holds; else raise ConfigError."""
    c = cfg.constants
    for name in ("g", "p0", "theta0", "cp", "R"):
        if getattr(c, name) <= 0:
            raise ConfigError(name, f"must be positive, got {getattr(c, name)}")
    if c.cv <= 0:
        raise ConfigError("cp", f"cv = cp - R = {c.cv} must be positive")
    if c.L <= 0 or c.H <= 0:
        raise ConfigError("L" if c.L <= 0 else "H", "domain size must be positive")
    if cfg.nx < 4:
        raise ConfigError("nx", f"must be >= 4, got {cfg.nx}")
    if cfg.nz < 4:
        raise ConfigError("nz", f"must be >= 4, got {cfg.nz}")
    if cfg.dt <= 0:
        raise ConfigError("dt", f"nonpositive timestep {cfg.dt}")
    if cfg.integrator not in INTEGRATORS:
        raise ConfigError("integrator",
                          f"got {cfg.integrator!r}; allowed: {', '.join(INTEGRATORS)}")
    if cfg.velocity_form not in VELOCITY_FORMS:
        raise ConfigError("velocity_form",
                          f"got {cfg.velocity_form!r}; allowed: {', '.join(VELOCITY_FORMS)}")
    if cfg.upwind_order not in UPWIND_ORDERS:
        raise ConfigError("upwind_order",
                          f"got {cfg.upwind_order}; allowed: 1, 3")
    if cfg.preconditioner not in ("none", "column-block"):
        raise ConfigError("preconditioner",
                          f"got {cfg.preconditioner!r}; allowed: none, column-block")
    for key in ("timeseries_interval", "snapshot_interval", "checkpoint_interval"):
        _check_cadence(cfg, key)
    for key in ("breed_vmax", "breed_max_days", "run_days", "surface_exner",
                "newton_abs_tol", "newton_rel_tol", "linear_rel_tol", "cfl_max"):
        _check_positive(cfg, key)
    for key in ("newton_max_iters", "linear_max_iters", "linear_restart"):
        if getattr(cfg, key) < 1:
            raise ConfigError(key, f"iteration cap must be >= 1, got {getattr(cfg, key)}")
    return cfg
