"""Balanced initial state and the breeding procedure.

The construction is: perturbed temperature field, then per-column densities
from a discrete hydrostatic solve, then out-of-slice velocity in geostrophic
balance and in-slice velocity from the sheared background, all derived from
the *same* discrete Exner field so the initial state satisfies the discrete
balance exactly (not just the continuous one).
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import thermo
from .domain import Grid, PhysicalConstants, RunConfig, State


class HydrostaticSolveError(RuntimeError):
    """Column hydrostatic Newton failed; carries the worst column index."""

    def __init__(self, column: int, message: str):
        self.column = column
        super().__init__(f"column {column}: {message}")


class BreedingError(RuntimeError):
    """Breeding threshold not reached within the configured wall limit."""


def background_theta(z, c: PhysicalConstants):
    """Isothermal base profile theta0 * exp(N^2 (z - H/2) / g)."""
    return c.theta0 * np.exp(c.N2 * (np.asarray(z, dtype=float) - c.H / 2) / c.g)


def background_exner(z, c: PhysicalConstants, surface_exner: float = 1.0):
    """Exact hydrostatic Exner profile of the base state.

    Integrates cp * theta_bar * dPi/dz = -g in closed form from the surface
    value Pi(0) = surface_exner (= 1 when the mean surface pressure is p0).
    """
    z = np.asarray(z, dtype=float)
    coef = c.g ** 2 / (c.cp * c.theta0 * c.N2)
    return surface_exner + coef * (np.exp(-c.N2 * (z - c.H / 2) / c.g)
                                   - np.exp(c.N2 * c.H / (2 * c.g)))


def mode_constant(Bu: float) -> float:
    """Vertical-structure constant of the unstable mode for Burger number Bu."""
    if Bu <= 0:
        raise ValueError(f"Burger number must be positive, got {Bu}")
    h = Bu / 2
    return math.sqrt((h - math.tanh(h)) * (1.0 / math.tanh(h) - h)) / Bu


def perturbed_theta(grid: Grid, amplitude: float, c: PhysicalConstants) -> np.ndarray:
    """Base profile plus the sheared-mode temperature perturbation at cell centers."""
    theta = np.broadcast_to(background_theta(grid.z_centers, c),
                            (grid.nx, grid.nz)).copy()
    if amplitude == 0.0:
        return theta
    Bu = c.Bu
    n = mode_constant(Bu)
    Z = Bu * (grid.z_centers / c.H - 0.5)            # (nz,)
    phase = math.pi * grid.x_centers / c.L           # (nx,)
    coth = 1.0 / math.tanh(Bu / 2)
    bracket = (-(1.0 - (Bu / 2) * coth) * np.outer(np.cos(phase), np.sinh(Z))
               - n * Bu * np.outer(np.sin(phase), np.cosh(Z)))
    theta += (c.theta0 * amplitude * c.N / c.g) * bracket
    return theta


def _column_residual(D, theta, pi_lid, grid: Grid, c: PhysicalConstants):
    """Discrete hydrostatic residual per column, all columns at once.

    Rows 0..nz-2 are the interior z-faces (cp * thetaf * dPi/dz + g); the
    last row anchors the top cell by extrapolating the same balance over the
    half cell to the lid, whose Exner value is prescribed.
    """
    pi = thermo.exner(D, theta, c)
    res = np.empty_like(D)
    thf = 0.5 * (theta[:, :-1] + theta[:, 1:])
    res[:, :-1] = c.cp * thf * (pi[:, 1:] - pi[:, :-1]) / grid.dz + c.g
    res[:, -1] = c.cp * theta[:, -1] * (pi_lid - pi[:, -1]) / (grid.dz / 2) + c.g
    return res, pi


def hydrostatic_density(theta_s: np.ndarray, grid: Grid, c: PhysicalConstants,
                        surface_exner: float = 1.0,
                        tol: float | None = None, max_iters: int = 60,
                        return_history: bool = False):
    """Solve each column's discrete hydrostatic balance for density.

    Damped Newton on the column unknowns D(i, :). The Jacobian is
    bidiagonal (residual row k couples D[k] and D[k+1]), so the Newton step
    is a top-down back substitution, vectorized across columns.
    """
    if np.any(theta_s <= 0):
        raise HydrostaticSolveError(int(np.argwhere(np.any(theta_s <= 0, axis=1))[0][0]),
                                    "non-positive temperature in column")
    if tol is None:
        tol = 1e-13 * c.g
    pi_lid = float(background_exner(c.H, c, surface_exner))
    D = thermo.density_from_exner(
        background_exner(grid.z_centers, c, surface_exner)[None, :], theta_s, c)

    res, pi = _column_residual(D, theta_s, pi_lid, grid, c)
    norms = np.max(np.abs(res), axis=1)
    history = [float(norms.max())]
    nz = grid.nz
    for _ in range(max_iters):
        if norms.max() <= tol:
            break
        dpi_dD = (c.R / c.cv) * pi / D
        thf = 0.5 * (theta_s[:, :-1] + theta_s[:, 1:])
        # row k < nz-1: d/dD[k] and d/dD[k+1]; row nz-1: d/dD[nz-1] only
        diag = np.empty_like(D)
        diag[:, :-1] = -c.cp * thf * dpi_dD[:, :-1] / grid.dz
        diag[:, -1] = -c.cp * theta_s[:, -1] * dpi_dD[:, -1] / (grid.dz / 2)
        upper = c.cp * thf * dpi_dD[:, 1:] / grid.dz

        delta = np.empty_like(D)
        delta[:, nz - 1] = -res[:, nz - 1] / diag[:, nz - 1]
        for k in range(nz - 2, -1, -1):
            delta[:, k] = (-res[:, k] - upper[:, k] * delta[:, k + 1]) / diag[:, k]

        # per-column step halving on positivity loss or residual growth
        alpha = np.ones(grid.nx)
        for _ in range(8):
            D_try = D + alpha[:, None] * delta
            bad_pos = np.any(D_try <= 0, axis=1)
            ok = ~bad_pos
            if ok.any():
                res_try = np.full_like(res, np.inf)
                r, _ = _column_residual(np.where(ok[:, None], D_try, D),
                                        theta_s, pi_lid, grid, c)
                res_try[ok] = r[ok]
                worse = np.max(np.abs(res_try), axis=1) > norms
            else:
                worse = np.zeros(grid.nx, dtype=bool)
            bad = bad_pos | worse
            if not bad.any():
                break
            alpha[bad] *= 0.5
        D_new = D + alpha[:, None] * delta
        if np.any(D_new <= 0):
            col = int(np.argwhere(np.any(D_new <= 0, axis=1))[0][0])
            raise HydrostaticSolveError(col, "density went non-positive under damping")
        D = D_new
        res, pi = _column_residual(D, theta_s, pi_lid, grid, c)
        norms = np.max(np.abs(res), axis=1)
        history.append(float(norms.max()))
    else:
        col = int(np.argmax(norms))
        raise HydrostaticSolveError(col,
                                    f"no convergence in {max_iters} iterations "
                                    f"(residual {norms[col]:.3e})")
    if return_history:
        return D, history
    return D


def geostrophic_v(theta_s: np.ndarray, D: np.ndarray, grid: Grid,
                  c: PhysicalConstants) -> np.ndarray:
    """v = (cp theta_s / f) dPi/dx with a centered periodic x-difference."""
    pi = thermo.exner(D, theta_s, c)
    dpi_dx = (np.roll(pi, -1, axis=0) - np.roll(pi, 1, axis=0)) / (2 * grid.dx)
    return (c.cp / c.f) * theta_s * dpi_dx


def initial_u(theta_s: np.ndarray, D: np.ndarray, grid: Grid,
              c: PhysicalConstants) -> np.ndarray:
    """Sheared in-slice velocity (cp s / f)(Pi - Pi0), averaged to x-faces."""
    pi = thermo.exner(D, theta_s, c)
    G = (c.cp * c.s / c.f) * (pi - c.Pi0)
    return 0.5 * (np.roll(G, 1, axis=0) + G)


def initial_state(cfg: RunConfig, grid: Grid | None = None) -> State:
    """Balanced (optionally perturbed) state at t = 0, before breeding."""
    c = cfg.constants
    if grid is None:
        grid = cfg.grid()
    theta = perturbed_theta(grid, cfg.amplitude, c)
    D = hydrostatic_density(theta, grid, c, cfg.surface_exner)
    v = geostrophic_v(theta, D, grid, c)
    u = initial_u(theta, D, grid, c)
    w = np.zeros((grid.nx, grid.nz + 1))
    return State(t=0.0, u=u, w=w, v=v, theta_s=theta, D=D)


def breed(state: State, cfg: RunConfig,
          step: Callable[[State], State]) -> tuple[State, float]:
    """Integrate until max|v| reaches the threshold, then reset the clock.

    `step` advances the state by one dt and returns it. The threshold check
    runs after every step so the reported breeding time is a regression
    quantity, not an output-cadence artifact.
    """
    limit = cfg.breed_max_days * 86400.0
    if np.max(np.abs(state.v)) >= cfg.breed_vmax:
        t_breed = state.t
        state.t = 0.0
        return state, t_breed
    while state.t < limit:
        state = step(state)
        if np.max(np.abs(state.v)) >= cfg.breed_vmax:
            t_breed = state.t
            state.t = 0.0
            return state, t_breed
    raise BreedingError(
        f"max|v| never reached {cfg.breed_vmax} m/s within "
        f"{cfg.breed_max_days} simulated days")
